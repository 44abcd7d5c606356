#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "quasipic/harness.hpp"
#include "quasipic/snapshot.hpp"

namespace {

using namespace quasipic;

struct GlobalArgs {
  std::string config_path;
  std::string out_dir;
  int64_t seed = -1;
  int threads = 0;
};

ExperimentConfig load_config(const GlobalArgs& g) {
  if (g.config_path.empty()) throw std::runtime_error("missing --config <path>");
  ExperimentConfig cfg = parse_config(g.config_path);
  if (g.seed >= 0) cfg.seed = static_cast<uint64_t>(g.seed);
  if (!g.out_dir.empty()) cfg.output_dir = g.out_dir;
  return cfg;
}

int cmd_run(const GlobalArgs& g) {
  ExperimentConfig cfg = load_config(g);
  const TorusGrid grid = make_grid(cfg.dim, cfg.cells);
  const AnalyticDensity density = scenario_density(cfg);
  ParticleEnsemble e = sample_ensemble(density, cfg.particle_count, cfg.seed);
  KineticState state = make_kinetic_state(std::move(e), grid, cfg.params);

  const double dt = choose_dt(cfg, support_radius(state.ensemble));
  std::filesystem::create_directories(cfg.output_dir);
  save_ensemble(cfg.output_dir + "/initial.pss1", state.ensemble);

  DiagnosticsSeries diag = run(state, cfg.params.final_time, dt, cfg.record_every);
  save_ensemble(cfg.output_dir + "/final.pss1", state.ensemble);
  {
    std::ofstream os(cfg.output_dir + "/diagnostics.csv");
    diag.write_csv(os);
  }
  {
    std::ofstream os(cfg.output_dir + "/resolved.cfg");
    os << cfg.resolved_text();
  }

  const double mass0 = diag.mass.front();
  double mass_drift = 0.0;
  bool finite = true;
  for (size_t i = 0; i < diag.size(); ++i) {
    mass_drift = std::max(mass_drift, std::abs(diag.mass[i] - mass0) / std::abs(mass0));
    for (double v : {diag.kinetic_energy[i], diag.field_energy[i], diag.total_energy[i],
                     diag.support_radius[i], diag.density_sup[i], diag.density_l2[i]})
      finite = finite && std::isfinite(v);
  }
  std::cout << "run: " << diag.size() << " samples, dt = " << dt << ", mass drift = " << mass_drift
            << "\n";
  const bool ok = finite && mass_drift < 1e-12;
  std::cout << (ok ? "invariants ok" : "INVARIANT VIOLATION") << "\n";
  return ok ? 0 : 1;
}

int cmd_twin(const GlobalArgs& g) {
  ExperimentConfig cfg = load_config(g);
  const TwinReport rep = run_twin(cfg);
  write_twin_report(rep, cfg, cfg.output_dir);
  std::cout << "twin: " << rep.samples.size() << " samples, phi measured = " << rep.phi_measured
            << ", sup W2 = " << rep.sup_w2() << ", sup W1 to limit = " << rep.sup_w1_to_limit()
            << "\n"
            << (rep.all_ok() ? "invariants ok" : "INVARIANT VIOLATION") << "\n";
  return rep.all_ok() ? 0 : 1;
}

int cmd_sweep(const GlobalArgs& g, const std::vector<double>& epsilons) {
  ExperimentConfig cfg = load_config(g);
  const auto rows = sweep_epsilon(cfg, epsilons);
  write_sweep_table(rows, cfg.output_dir);
  bool ok = true;
  for (const auto& r : rows) {
    std::cout << "eps = " << r.epsilon << "  phi = " << r.phi << "  sup W1 = " << r.sup_w1_to_limit
              << "  omega = " << r.measured_omega << " (expected " << r.expected_omega << ")\n";
    ok = ok && r.ok;
  }
  std::cout << (ok ? "invariants ok" : "INVARIANT VIOLATION") << "\n";
  return ok ? 0 : 1;
}

int cmd_wasserstein(const std::string& a_path, const std::string& b_path, int p,
                    const std::string& method, const std::string& plan_path, double reg, int iters) {
  const ParticleEnsemble a = load_ensemble(a_path);
  const ParticleEnsemble b = load_ensemble(b_path);
  if (method == "exact") {
    TransportOptions opts;
    opts.size_cap = std::numeric_limits<int64_t>::max();
    const TransportPlan plan = w_exact(a, b, p, opts);
    std::cout.precision(17);
    std::cout << plan.distance << "\n";
    if (!plan_path.empty()) {
      std::ofstream os(plan_path);
      os << "i,j,mass\n";
      os.precision(17);
      for (const auto& e : plan.coupling) os << e.i << ',' << e.j << ',' << e.mass << '\n';
    }
  } else if (method == "sinkhorn") {
    const SinkhornResult r = w_sinkhorn(a, b, p, reg, iters);
    std::cout.precision(17);
    std::cout << r.distance << "\n";
    std::cerr << "marginal error " << r.marginal_error << " after " << r.iterations << " iterations\n";
  } else {
    throw std::runtime_error("method must be exact or sinkhorn");
  }
  return 0;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

int cmd_bounds(const GlobalArgs& g, const std::string& from) {
  ExperimentConfig cfg = load_config(g);
  std::ifstream in(from);
  if (!in) throw std::runtime_error("cannot open " + from);
  std::string header;
  std::getline(in, header);
  const std::vector<std::string> cols = split_csv_line(header);
  auto col = [&](const std::string& name) {
    for (size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return static_cast<int>(i);
    throw std::runtime_error("diagnostics file misses column " + name);
  };
  const int c_t = col("t"), c_vmax = col("vmax"), c_rho = col("rho_inf"), c_w2 = col("w2_ref");

  std::vector<double> times, vmax, rho_inf;
  std::vector<std::optional<double>> w2;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    times.push_back(std::stod(f[static_cast<size_t>(c_t)]));
    vmax.push_back(std::stod(f[static_cast<size_t>(c_vmax)]));
    rho_inf.push_back(std::stod(f[static_cast<size_t>(c_rho)]));
    const std::string& w = f[static_cast<size_t>(c_w2)];
    w2.push_back(w.empty() ? std::optional<double>{} : std::optional<double>{std::stod(w)});
  }
  if (times.size() < 2) throw std::runtime_error("diagnostics file has fewer than two samples");

  const double eps = cfg.params.epsilon;
  std::vector<double> a_series(times.size());
  for (size_t i = 0; i < times.size(); ++i) {
    const double dev = std::max(rho_inf[i] - 1.0, 0.0);
    a_series[i] = gronwall_rate(rho_inf[i], rho_inf[i], dev, eps);
  }
  const double w2_init = w2.front() ? *w2.front() : 0.0;
  const StabilityEnvelope env = stability_envelope(w2_init, times, a_series, cfg.params.c0, cfg.dim);

  std::filesystem::create_directories(cfg.output_dir);
  std::ofstream os(cfg.output_dir + "/envelope.csv");
  os << "t,A,intA,env_w2,env_V,measured_w2,measured_V,ok\n";
  os.precision(17);
  int failures = 0;
  for (size_t i = 0; i < times.size(); ++i) {
    const double env_v = cfg.dim == 2
                             ? support_envelope_2d(vmax.front(), times[i] / eps, eps,
                                                   cfg.params.alpha, cfg.params.c_alpha)
                             : (cfg.dim == 3 ? support_envelope_3d(
                                                   vmax.front() * std::pow(eps, cfg.params.gamma), eps,
                                                   cfg.params.gamma,
                                                   std::max(times[i], times[1] - times[0]) / eps,
                                                   cfg.params.c_alpha)
                                             : std::numeric_limits<double>::infinity());
    bool ok = vmax[i] <= env_v * (1.0 + 1e-12);
    if (w2[i] && w2_init > 0.0) ok = ok && *w2[i] <= env.envelope[i] * (1.0 + 1e-12);
    failures += ok ? 0 : 1;
    os << times[i] << ',' << a_series[i] << ',' << env.a_integral[i] << ',' << env.envelope[i] << ','
       << env_v << ',';
    if (w2[i]) os << *w2[i];
    os << ',' << vmax[i] << ',' << (ok ? 1 : 0) << '\n';
  }
  std::cout << "bounds: " << times.size() << " samples, " << failures << " envelope failures\n";
  std::cout << (failures == 0 ? "invariants ok" : "INVARIANT VIOLATION") << "\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quasineutral Vlasov kinetics: simulation, transport distances and envelope checks"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "configuration file");
  app.add_option("--seed", g.seed, "override the configured seed");
  app.add_option("--out", g.out_dir, "override the configured output directory");
  app.add_option("--threads", g.threads, "worker threads (speed only, never results)");

  auto* run_cmd = app.add_subcommand("run", "single kinetic run");
  auto* twin_cmd = app.add_subcommand("twin", "perturbed vs analytic twin experiment");

  std::vector<double> epsilons;
  auto* sweep_cmd = app.add_subcommand("sweep", "twin runs across a list of epsilon values");
  sweep_cmd->add_option("--epsilons", epsilons, "epsilon values")->required();

  std::string wa, wb, method = "exact", plan_path;
  int p = 2, iters = 20000;
  double reg = 0.0;
  auto* w_cmd = app.add_subcommand("wasserstein", "distance between two PSS1 ensembles");
  w_cmd->add_option("a", wa, "first snapshot")->required();
  w_cmd->add_option("b", wb, "second snapshot")->required();
  w_cmd->add_option("--p", p, "exponent, 1 or 2")->check(CLI::IsMember({1, 2}));
  w_cmd->add_option("--method", method, "exact or sinkhorn");
  w_cmd->add_option("--plan", plan_path, "write the coupling as sparse triplets CSV");
  w_cmd->add_option("--reg", reg, "sinkhorn final regularization (0 = auto)");
  w_cmd->add_option("--iters", iters, "sinkhorn iteration budget");

  std::string from;
  auto* b_cmd = app.add_subcommand("bounds", "evaluate envelopes against recorded diagnostics");
  b_cmd->add_option("--from", from, "diagnostics CSV")->required();

  CLI11_PARSE(app, argc, argv);
  if (g.threads > 0) set_global_threads(g.threads);

  try {
    if (run_cmd->parsed()) return cmd_run(g);
    if (twin_cmd->parsed()) return cmd_twin(g);
    if (sweep_cmd->parsed()) return cmd_sweep(g, epsilons);
    if (w_cmd->parsed()) return cmd_wasserstein(wa, wb, p, method, plan_path, reg, iters);
    if (b_cmd->parsed()) return cmd_bounds(g, from);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 2;
}
