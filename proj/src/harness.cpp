#include "quasipic/harness.hpp"

#include <filesystem>
#include <fstream>

#include "quasipic/correctors.hpp"
#include "quasipic/snapshot.hpp"

namespace quasipic {

namespace {

// deterministic systematic resampling: n equal-weight picks at fixed
// quantiles of the cumulative weights; no randomness, so it selects the same
// sites whenever the weights agree
std::vector<int64_t> systematic_subsample(const std::vector<double>& weights, int64_t n) {
  KahanSum total;
  for (double w : weights) total.add(w);
  const double mass = total.value();
  std::vector<int64_t> picks;
  picks.reserve(static_cast<size_t>(n));
  double cum = 0.0;
  size_t i = 0;
  for (int64_t k = 0; k < n; ++k) {
    const double target = mass * (static_cast<double>(k) + 0.5) / static_cast<double>(n);
    while (i + 1 < weights.size() && cum + weights[i] < target) {
      cum += weights[i];
      ++i;
    }
    picks.push_back(static_cast<int64_t>(i));
  }
  return picks;
}

ParticleEnsemble take_subsample(const ParticleEnsemble& e, const std::vector<int64_t>& ids) {
  ParticleEnsemble out;
  out.dim = e.dim;
  out.seed = e.seed;
  const double w = 1.0 / static_cast<double>(ids.size());
  for (int64_t id : ids) {
    out.positions.push_back(e.positions[static_cast<size_t>(id)]);
    out.velocities.push_back(e.velocities[static_cast<size_t>(id)]);
    out.weights.push_back(w);
  }
  return out;
}

// smooth unit-scale displacement profile for the perturbation
Vec displacement_profile(const Vec& x, int dim, int mode) {
  const double m = 2.0 * M_PI * mode;
  Vec u;
  u[0] = std::sin(m * x[dim > 1 ? 1 : 0] + 0.7);
  if (dim > 1) u[1] = std::cos(m * x[0] + 0.3);
  if (dim > 2) u[2] = std::sin(m * x[0] + m * x[1]);
  return u;
}

bool particle_is_perturbed(uint64_t seed, int64_t index, double fraction) {
  const uint64_t h = splitmix64(splitmix64(seed ^ 0x5eedf00dull) + static_cast<uint64_t>(index));
  return static_cast<double>(h >> 11) * 0x1.0p-53 < fraction;
}

void apply_displacement(ParticleEnsemble& e, const ExperimentConfig& cfg, double amplitude) {
  const int mode = cfg.perturbation_kind == "high_freq"
                       ? std::max(cfg.cells / 4, 4 * cfg.perturbation_mode)
                       : cfg.perturbation_mode;
  for (size_t i = 0; i < e.size(); ++i) {
    if (!particle_is_perturbed(cfg.seed, static_cast<int64_t>(i), cfg.perturbation_fraction)) continue;
    e.velocities[i] += amplitude * displacement_profile(e.positions[i], e.dim, mode);
  }
}

struct TwinMeasurer {
  const ExperimentConfig& cfg;
  std::vector<int64_t> site_ids;

  TwinMeasurer(const ExperimentConfig& cfg_, const std::vector<double>& site_weights)
      : cfg(cfg_),
        site_ids(systematic_subsample(
            site_weights,
            std::min<int64_t>(cfg_.transport_sample_points, static_cast<int64_t>(site_weights.size())))) {}

  double w(const ParticleEnsemble& a, const ParticleEnsemble& b, int p) const {
    TransportOptions opts;
    opts.size_cap = std::max<int64_t>(cfg.transport_cap, 2 * static_cast<int64_t>(site_ids.size()) + 2);
    return w_exact(take_subsample(a, site_ids), take_subsample(b, site_ids), p, opts).distance;
  }
};

}  // namespace

double choose_dt(const ExperimentConfig& cfg, double vmax_initial) {
  if (cfg.dt > 0.0) return cfg.dt;
  const double spacing = 1.0 / cfg.cells;
  const double cfl = spacing / (4.0 * std::max(vmax_initial, 0.25));
  const double oscillation = cfg.params.epsilon / 8.0;
  double dt = std::min(cfl, oscillation);
  const auto steps = std::max<int64_t>(1, static_cast<int64_t>(std::ceil(cfg.params.final_time / dt)));
  return cfg.params.final_time / static_cast<double>(steps);
}

double TwinReport::sup_w1_to_limit() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, s.w1_to_limit);
  return m;
}

double TwinReport::sup_w2() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, s.w2_fg);
  return m;
}

bool TwinReport::all_ok() const {
  for (const auto& s : samples)
    if (!(s.triangle_ok && s.env_w2_ok && s.env_v_ok)) return false;
  return true;
}

TwinReport run_twin(const ExperimentConfig& cfg) {
  cfg.validate();
  const TorusGrid grid = make_grid(cfg.dim, cfg.cells);
  const QuasineutralParams& par = cfg.params;
  const double eps = par.epsilon;

  FluidFamily family_eps = scenario_epsilon_family(cfg);
  FluidFamily family_lim = scenario_limit_family(cfg);
  FluidTracers tracers_eps = make_tracers(family_eps, cfg.particles_per_cell);
  FluidTracers tracers_lim = make_tracers(family_lim, cfg.particles_per_cell);

  TwinReport report;
  report.config_hash = cfg.hash();
  report.seed = cfg.seed;
  report.scenario = cfg.scenario;
  report.phi_target = cfg.perturbation_magnitude;

  // perturbed copy of the reference superposition
  ParticleEnsemble f0 = tracers_eps.ensemble;
  const TwinMeasurer measurer(cfg, f0.weights);
  if (cfg.perturbation_magnitude > 0.0 && cfg.perturbation_kind != "none") {
    double amplitude = cfg.perturbation_magnitude;
    double measured = 0.0;
    for (int it = 0; it < 12; ++it) {
      ParticleEnsemble trial = tracers_eps.ensemble;
      apply_displacement(trial, cfg, amplitude);
      measured = measurer.w(trial, tracers_eps.ensemble, 2);
      if (std::abs(measured - cfg.perturbation_magnitude) <= 0.02 * cfg.perturbation_magnitude) break;
      amplitude *= cfg.perturbation_magnitude / std::max(measured, 1e-300);
    }
    if (std::abs(measured - cfg.perturbation_magnitude) > 0.05 * cfg.perturbation_magnitude)
      throw std::runtime_error("run_twin: could not tune the perturbation to the requested W2");
    apply_displacement(f0, cfg, amplitude);
    report.phi_measured = measured;
  }

  KineticState state = make_kinetic_state(std::move(f0), grid, par);
  report.v_initial = support_radius(state.ensemble);

  // correctors driven by the fluid current
  const GriddedField e0 = solve_potential(total_density(family_eps), eps).field;
  CorrectorState corrector = corrector_initial(e0, mean_current(family_eps), eps, cfg.corrector_frequency);
  report.div_dplus_initial = divergence_l2(corrector);
  report.well_prepared = report.div_dplus_initial < 1e-10;

  const double dt = choose_dt(cfg, std::max(report.v_initial, [&] {
    double m = 0.0;
    for (const auto& v : tracers_lim.ensemble.velocities) m = std::max(m, v.norm());
    return m;
  }()));
  report.dt = dt;
  const auto steps = static_cast<int64_t>(std::llround(par.final_time / dt));

  double w2_initial = 0.0;
  std::vector<double> a_times, a_values;

  auto record_sample = [&](int64_t /*step*/) {
    TwinSample s;
    s.t = state.time;

    const ParticleEnsemble& g_eps = tracers_eps.ensemble;
    const ParticleEnsemble& g_lim = tracers_lim.ensemble;
    s.w2_fg = measurer.w(state.ensemble, g_eps, 2);

    const ParticleEnsemble f_tilde = filter_ensemble(state.ensemble, corrector, state.time);
    const ParticleEnsemble g_tilde = filter_ensemble(g_eps, corrector, state.time);
    s.w1_filtered = measurer.w(f_tilde, g_tilde, 1);
    s.w1_to_limit = measurer.w(f_tilde, g_lim, 1);
    s.w1_gtilde_g = measurer.w(g_tilde, g_lim, 1);
    s.triangle_ok = s.w1_to_limit <= s.w1_filtered + s.w1_gtilde_g + 1e-9;

    const GriddedField rho_f = deposit(state.ensemble, grid);
    const GriddedField rho_g = total_density(family_eps);
    double dev_f = 0.0;
    for (double v : rho_f.values) dev_f = std::max(dev_f, std::abs(v - 1.0));
    const double rho_f_sup = rho_f.max_abs();
    const double rho_g_sup = rho_g.max_abs();
    s.a_rate = gronwall_rate(rho_g_sup, std::max(rho_f_sup, rho_g_sup), dev_f, eps);

    if (!a_times.empty())
      s.a_integral = report.samples.back().a_integral +
                     0.5 * (s.a_rate + a_values.back()) * (s.t - a_times.back());
    a_times.push_back(s.t);
    a_values.push_back(s.a_rate);

    if (report.samples.empty()) w2_initial = s.w2_fg;
    s.env_w2 = std::sqrt(envelope_squared_at(w2_initial * w2_initial, s.a_integral, par.c0, grid.dim));
    s.env_w2_ok = w2_initial == 0.0 || s.w2_fg <= s.env_w2 * (1.0 + 1e-12);

    s.measured_v = support_radius(state.ensemble);
    if (grid.dim == 2) {
      s.env_v = support_envelope_2d(report.v_initial, s.t / eps, eps, par.alpha, par.c_alpha);
    } else if (grid.dim == 3) {
      s.env_v = support_envelope_3d(report.v_initial * std::pow(eps, par.gamma), eps, par.gamma,
                                    std::max(s.t, dt) / eps, par.c_alpha);
    } else {
      s.env_v = std::numeric_limits<double>::infinity();
    }
    s.env_v_ok = s.measured_v <= s.env_v * (1.0 + 1e-12);

    report.samples.push_back(s);
    report.diagnostics.append(state, s.w2_fg);
  };

  record_sample(0);
  for (int64_t step = 1; step <= steps; ++step) {
    const FluidFamily before_eps = family_eps;
    const FluidFamily before_lim = family_lim;
    const GriddedField j = mean_current(family_eps);

    push(state, dt);
    multifluid_step(family_eps, dt);
    limit_step(family_lim, dt);
    advect_tracers(tracers_eps, before_eps, family_eps, dt);
    advect_tracers(tracers_lim, before_lim, family_lim, dt);
    advance_correctors(corrector, j, dt);

    if (step % cfg.record_every == 0 || step == steps) record_sample(step);
  }
  return report;
}

CalibrationResult calibrate_envelope_constants(const TwinReport& report, const ExperimentConfig& cfg) {
  CalibrationResult out;
  const int d = cfg.dim;
  const double eps = cfg.params.epsilon;
  const double z0 = report.samples.empty() ? 0.0 : report.samples.front().w2_fg;

  auto w2_dominates = [&](double c0) {
    for (const auto& s : report.samples)
      if (z0 > 0.0 &&
          s.w2_fg * s.w2_fg > envelope_squared_at(z0 * z0, s.a_integral, c0, d) * (1.0 + 1e-12))
        return false;
    return true;
  };
  double lo = 1.0 + 1e-6, hi = lo;
  if (!w2_dominates(lo)) {
    while (!w2_dominates(hi) && hi < 1e6) hi *= 2.0;
    if (hi >= 1e6) throw std::runtime_error("calibration: no admissible c0 below 1e6");
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (w2_dominates(mid) ? hi : lo) = mid;
    }
    out.c0 = hi * (1.0 + 1e-9);
  } else {
    out.c0 = lo;
  }

  if (d == 2 || d == 3) {
    auto v_dominates = [&](double c) {
      for (const auto& s : report.samples) {
        const double env =
            d == 2 ? support_envelope_2d(report.v_initial, s.t / eps, eps, cfg.params.alpha, c)
                   : support_envelope_3d(report.v_initial * std::pow(eps, cfg.params.gamma), eps,
                                         cfg.params.gamma, std::max(s.t, report.dt) / eps, c);
        if (s.measured_v > env * (1.0 + 1e-12)) return false;
      }
      return true;
    };
    double clo = 1e-9, chi = clo;
    if (!v_dominates(clo)) {
      while (!v_dominates(chi) && chi < 1e9) chi *= 2.0;
      if (chi >= 1e9) throw std::runtime_error("calibration: no admissible support constant below 1e9");
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (clo + chi);
        (v_dominates(mid) ? chi : clo) = mid;
      }
      out.c_alpha = chi * (1.0 + 1e-9);
    } else {
      out.c_alpha = clo;
    }
  }
  return out;
}

double dominant_frequency(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size() || times.size() < 8)
    throw std::invalid_argument("dominant_frequency: need at least 8 samples");
  KahanSum ms;
  for (double v : values) ms.add(v);
  const double mean = ms.value() / static_cast<double>(values.size());

  std::vector<double> crossings;
  for (size_t i = 1; i < values.size(); ++i) {
    const double a = values[i - 1] - mean, b = values[i] - mean;
    if (a == 0.0) continue;
    if ((a < 0.0) != (b < 0.0)) {
      const double s = a / (a - b);
      crossings.push_back(times[i - 1] + s * (times[i] - times[i - 1]));
    }
  }
  if (crossings.size() < 4)
    throw std::runtime_error("dominant_frequency: too few oscillations in the record");
  return M_PI * static_cast<double>(crossings.size() - 1) / (crossings.back() - crossings.front());
}

double measure_plasma_frequency(const ExperimentConfig& cfg) {
  ExperimentConfig probe = cfg;
  probe.scenario = "cold_mode";
  if (probe.scenario_delta <= 0.0 || probe.scenario_delta > 0.05) probe.scenario_delta = 1e-3;
  probe.perturbation_magnitude = 0.0;

  FluidFamily family = scenario_epsilon_family(probe);
  ParticleEnsemble cold = superpose(family, probe.particles_per_cell);
  KineticState state = make_kinetic_state(std::move(cold), family.grid, probe.params);

  const double eps = probe.params.epsilon;
  const double period = 2.0 * M_PI * eps;
  const double t_end = 6.0 * period;
  const double dt = period / 128.0;

  std::vector<double> times, amps;
  const int bins[3] = {probe.scenario_mode % probe.cells, 0, 0};
  const int64_t mode_idx = encode_index(bins, family.grid);
  auto record = [&] {
    const GriddedField rho = deposit(state.ensemble, family.grid);
    const SpectralField rho_hat = forward_transform(rho);
    times.push_back(state.time);
    amps.push_back(2.0 * rho_hat.coefficients[static_cast<size_t>(mode_idx)].real());
  };
  record();
  const auto steps = static_cast<int64_t>(std::llround(t_end / dt));
  for (int64_t s = 1; s <= steps; ++s) {
    push(state, dt);
    record();
  }
  return dominant_frequency(times, amps);
}

std::vector<SweepRow> sweep_epsilon(const ExperimentConfig& base, const std::vector<double>& epsilons) {
  if (epsilons.empty()) throw std::invalid_argument("sweep_epsilon: empty epsilon list");
  std::vector<SweepRow> rows;
  for (double eps : epsilons) {
    if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("sweep_epsilon: epsilon outside (0,1]");
    ExperimentConfig cfg = base;
    cfg.params.epsilon = eps;
    const double scale = base.perturbation_magnitude > 0.0 ? base.perturbation_magnitude : 1.0;
    cfg.perturbation_magnitude = scale * eps * eps;

    SweepRow row;
    row.epsilon = eps;
    row.phi = cfg.perturbation_magnitude;
    const TwinReport rep = run_twin(cfg);
    row.sup_w2 = rep.sup_w2();
    row.sup_w1_to_limit = rep.sup_w1_to_limit();
    row.measured_omega = measure_plasma_frequency(cfg);
    row.expected_omega = 1.0 / eps;
    row.ok = rep.all_ok();
    rows.push_back(row);
  }
  return rows;
}

namespace {

void put_num(std::ostream& os, double v, char sep) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g%c", v, sep);
  os << buf;
}

}  // namespace

void write_twin_report(const TwinReport& report, const ExperimentConfig& cfg, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  {
    std::ofstream os(dir + "/twin.csv");
    os << "t,w2_fg,w1_filtered,w1_to_limit,w1_gtilde_g,a_rate,int_a,env_w2,env_v,measured_v,"
          "triangle_ok,env_w2_ok,env_v_ok\n";
    for (const auto& s : report.samples) {
      put_num(os, s.t, ',');
      put_num(os, s.w2_fg, ',');
      put_num(os, s.w1_filtered, ',');
      put_num(os, s.w1_to_limit, ',');
      put_num(os, s.w1_gtilde_g, ',');
      put_num(os, s.a_rate, ',');
      put_num(os, s.a_integral, ',');
      put_num(os, s.env_w2, ',');
      put_num(os, s.env_v, ',');
      put_num(os, s.measured_v, ',');
      os << (s.triangle_ok ? 1 : 0) << ',' << (s.env_w2_ok ? 1 : 0) << ',' << (s.env_v_ok ? 1 : 0)
         << '\n';
    }
  }
  {
    std::ofstream os(dir + "/diagnostics.csv");
    report.diagnostics.write_csv(os);
  }
  {
    std::ofstream os(dir + "/resolved.cfg");
    os << cfg.resolved_text();
  }
  {
    std::ofstream os(dir + "/summary.txt");
    os << "twin experiment summary\n";
    os << "version: " << QUASIPIC_VERSION << "\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(report.config_hash));
    os << "config_hash: " << buf << "\n";
    os << "seed: " << report.seed << "\n";
    os << "scenario: " << report.scenario << "\n";
    os << "samples: " << report.samples.size() << "\n";
    os << "dt: " << report.dt << "\n";
    os << "phi_target: " << report.phi_target << "\n";
    os << "phi_measured: " << report.phi_measured << "\n";
    os << "div_dplus_initial: " << report.div_dplus_initial << "\n";
    os << "well_prepared: " << (report.well_prepared ? "yes" : "no") << "\n";
    os << "sup_w2: " << report.sup_w2() << "\n";
    os << "sup_w1_to_limit: " << report.sup_w1_to_limit() << "\n";
    os << "all_ok: " << (report.all_ok() ? "yes" : "no") << "\n";
    os << "\nresolved configuration (defaults applied):\n" << cfg.resolved_text();
  }
}

void write_sweep_table(const std::vector<SweepRow>& rows, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream os(dir + "/sweep.csv");
  os << "epsilon,phi,sup_w2,sup_w1_to_limit,measured_omega,expected_omega,ok\n";
  for (const auto& r : rows) {
    put_num(os, r.epsilon, ',');
    put_num(os, r.phi, ',');
    put_num(os, r.sup_w2, ',');
    put_num(os, r.sup_w1_to_limit, ',');
    put_num(os, r.measured_omega, ',');
    put_num(os, r.expected_omega, ',');
    os << (r.ok ? 1 : 0) << '\n';
  }
}

}  // namespace quasipic
