#include "quasipic/bounds.hpp"

#include "quasipic/cic.hpp"
#include "quasipic/transport.hpp"

namespace quasipic {

double gronwall_rate(double rho2_inf, double rho_max_inf, double rho1_dev_inf, double epsilon) {
  if (rho2_inf < 0.0 || rho_max_inf < 0.0 || rho1_dev_inf < 0.0)
    throw std::invalid_argument("gronwall_rate: density norms must be nonnegative");
  if (!(epsilon > 0.0)) throw std::invalid_argument("gronwall_rate: epsilon must be > 0");
  const double inv_eps2 = 1.0 / (epsilon * epsilon);
  return 1.0 + inv_eps2 * std::sqrt(rho2_inf) * std::sqrt(rho_max_inf) + inv_eps2 * rho1_dev_inf;
}

double log_modulus(double z, int d) {
  if (z < 0.0) throw std::invalid_argument("log_modulus: z must be nonnegative");
  const double dd = static_cast<double>(d);
  if (z >= dd) {
    const double l16 = std::log(16.0);
    return dd * l16 * l16;
  }
  if (z == 0.0) return 0.0;
  const double l = std::log(16.0 * dd / z);
  return z * l * l;
}

double gronwall_closed_form(double z, double a_integral, double c0, int d,
                            bool positive_exponent_variant) {
  const double sixteen_d = 16.0 * d;
  if (!(z > 0.0)) throw std::invalid_argument("gronwall_closed_form: z must be positive");
  if (z > sixteen_d) throw std::invalid_argument("gronwall_closed_form: z must be <= 16 d");
  if (a_integral < 0.0) throw std::invalid_argument("gronwall_closed_form: negative rate integral");
  const double sign = positive_exponent_variant ? 1.0 : -1.0;
  return sixteen_d * std::exp(std::log(z / sixteen_d) * std::exp(sign * c0 * a_integral));
}

namespace {

// piecewise-linear interpolant of the sampled rate
struct RateSeries {
  std::span<const double> times;
  std::span<const double> values;

  double operator()(double t) const {
    if (t <= times.front()) return values.front();
    if (t >= times.back()) return values.back();
    size_t hi = 1;
    while (times[hi] < t) ++hi;
    const double t0 = times[hi - 1], t1 = times[hi];
    const double s = (t - t0) / (t1 - t0);
    return (1.0 - s) * values[hi - 1] + s * values[hi];
  }
};

double ode_rhs(double q, double a, double c0, int d) {
  if (q <= 0.0) return 0.0;
  if (q >= static_cast<double>(d)) return c0 * a * q;
  return c0 * a * q * std::log(16.0 * d / q);
}

std::vector<double> integrate_once(double q0, const RateSeries& rate, std::span<const double> times,
                                   double c0, int d, double h_base) {
  std::vector<double> out;
  out.reserve(times.size());
  double q = q0;
  double t = times.front();
  out.push_back(q);
  for (size_t s = 1; s < times.size(); ++s) {
    const double t_next = times[s];
    const auto steps = std::max<int64_t>(1, static_cast<int64_t>(std::ceil((t_next - t) / h_base)));
    const double h = (t_next - t) / static_cast<double>(steps);
    for (int64_t i = 0; i < steps; ++i) {
      const double k1 = ode_rhs(q, rate(t), c0, d);
      const double k2 = ode_rhs(q + 0.5 * h * k1, rate(t + 0.5 * h), c0, d);
      const double k3 = ode_rhs(q + 0.5 * h * k2, rate(t + 0.5 * h), c0, d);
      const double k4 = ode_rhs(q + h * k3, rate(t + h), c0, d);
      q += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t += h;
    }
    t = t_next;
    out.push_back(q);
  }
  return out;
}

}  // namespace

std::vector<double> gronwall_ode_solve(double q0, std::span<const double> times,
                                       std::span<const double> a_values, double c0, int d) {
  if (!(q0 > 0.0)) throw std::invalid_argument("gronwall_ode_solve: q0 must be positive");
  if (times.size() != a_values.size() || times.size() < 2)
    throw std::invalid_argument("gronwall_ode_solve: need matching series with at least two samples");
  const RateSeries rate{times, a_values};
  const double span_t = times.back() - times.front();
  double h = span_t / 64.0;
  std::vector<double> prev = integrate_once(q0, rate, times, c0, d, h);
  for (int level = 0; level < 24; ++level) {
    h *= 0.5;
    std::vector<double> cur = integrate_once(q0, rate, times, c0, d, h);
    double rel = 0.0;
    for (size_t i = 0; i < cur.size(); ++i)
      rel = std::max(rel, std::abs(cur[i] - prev[i]) / std::max(1e-300, std::abs(cur[i])));
    prev = std::move(cur);
    if (rel < 1e-8) return prev;
  }
  throw std::runtime_error("gronwall_ode_solve: refinement did not converge");
}

double envelope_squared_at(double z0_squared, double a_integral, double c0, int d) {
  if (z0_squared < 0.0 || a_integral < 0.0)
    throw std::invalid_argument("envelope: negative input");
  if (z0_squared == 0.0) return 0.0;  // zero is a fixed point of the ODE
  const double dd = static_cast<double>(d);
  if (z0_squared > dd) return z0_squared * std::exp(c0 * a_integral);
  // crossing value of int A where the closed form reaches d
  const double a_star =
      z0_squared == dd ? 0.0
                       : -std::log(std::log(16.0) / std::log(16.0 * dd / z0_squared)) / c0;
  if (a_integral <= a_star) return gronwall_closed_form(z0_squared, a_integral, c0, d);
  return dd * std::exp(c0 * (a_integral - a_star));
}

StabilityEnvelope stability_envelope(double w2_initial, std::span<const double> times,
                                     std::span<const double> a_values, double c0, int d) {
  if (w2_initial < 0.0) throw std::invalid_argument("stability_envelope: negative initial distance");
  if (times.size() != a_values.size() || times.empty())
    throw std::invalid_argument("stability_envelope: need matching nonempty series");
  StabilityEnvelope env;
  env.w2_initial = w2_initial;
  env.c0 = c0;
  env.d = d;
  env.times.assign(times.begin(), times.end());
  env.a_integral.resize(times.size(), 0.0);
  for (size_t i = 1; i < times.size(); ++i) {
    env.a_integral[i] = env.a_integral[i - 1] +
                        0.5 * (a_values[i] + a_values[i - 1]) * (times[i] - times[i - 1]);
  }
  const double z = w2_initial * w2_initial;
  if (z > 0.0 && z <= static_cast<double>(d))
    env.switch_a = z == static_cast<double>(d)
                       ? 0.0
                       : -std::log(std::log(16.0) / std::log(16.0 * d / z)) / c0;
  env.envelope.resize(times.size());
  for (size_t i = 0; i < times.size(); ++i)
    env.envelope[i] = std::sqrt(envelope_squared_at(z, env.a_integral[i], c0, d));
  return env;
}

namespace {

// equal-weight position sample of a gridded density by rejection against its
// interpolated values
ParticleEnsemble sample_density_positions(const GriddedField& rho, int64_t n, uint64_t seed) {
  const double sup = rho.max_abs() * (1.0 + 1e-12);
  ParticleEnsemble e;
  e.dim = rho.grid.dim;
  e.seed = seed;
  e.positions.resize(static_cast<size_t>(n));
  e.velocities.assign(static_cast<size_t>(n), Vec{});
  e.weights.assign(static_cast<size_t>(n), 1.0 / static_cast<double>(n));
  for (int64_t i = 0; i < n; ++i) {
    CounterRng rng(seed, static_cast<uint64_t>(i));
    for (;;) {
      Vec x;
      for (int a = 0; a < e.dim; ++a) x[a] = rng.next_double();
      const double f = std::max(0.0, interpolate_scalar(rho, x));
      if (rng.next_double() * sup < f) {
        e.positions[static_cast<size_t>(i)] = x;
        break;
      }
    }
  }
  return e;
}

}  // namespace

LoeperReport loeper_field_check(const GriddedField& rho1, const GriddedField& rho2, double epsilon,
                                int sample_pairs, uint64_t seed) {
  if (rho1.grid != rho2.grid) throw std::invalid_argument("loeper_field_check: grid mismatch");
  for (const GriddedField* r : {&rho1, &rho2}) {
    if (r->components != 1) throw std::invalid_argument("loeper_field_check: densities must be scalar");
    if (std::abs(r->mean() - 1.0) > 1e-9)
      throw std::invalid_argument("loeper_field_check: densities must have unit mean");
    for (double v : r->values)
      if (v < -1e-12) throw std::invalid_argument("loeper_field_check: densities must be nonnegative");
  }
  const int d = rho1.grid.dim;
  const double eps2 = epsilon * epsilon;

  const PoissonSolution sol1 = solve_potential(rho1, epsilon);
  const PoissonSolution sol2 = solve_potential(rho2, epsilon);

  LoeperReport rep;
  rep.sample_pairs = sample_pairs;

  // (i) gradient L2 difference against the density sup and sampled W2
  {
    KahanSum diff2;
    for (size_t i = 0; i < sol1.field.values.size(); ++i) {
      const double dv = sol1.field.values[i] - sol2.field.values[i];
      diff2.add(dv * dv);
    }
    rep.gradient_l2_lhs = eps2 * std::sqrt(diff2.value() * rho1.grid.cell_volume());

    const int64_t n = 1024;
    const ParticleEnsemble mu = sample_density_positions(rho1, n, seed);
    const ParticleEnsemble nu = sample_density_positions(rho2, n, seed + 1);
    rep.w2_densities = w_exact(mu, nu, 2).distance;
    const double rho_sup = std::max(rho1.max_abs(), rho2.max_abs());
    rep.gradient_l2_rhs = std::sqrt(rho_sup) * rep.w2_densities;
    rep.ratio = rep.gradient_l2_rhs > 0.0 ? rep.gradient_l2_lhs / rep.gradient_l2_rhs : 0.0;
  }

  // (ii) interior log-Lipschitz modulus of each field over random pairs
  {
    CounterRng rng(seed, 0x10a51234ull);
    double best_c = 0.0;
    const double dev1 = [&] {
      double m = 0.0;
      for (double v : rho1.values) m = std::max(m, std::abs(v - 1.0));
      return m;
    }();
    const double dev2 = [&] {
      double m = 0.0;
      for (double v : rho2.values) m = std::max(m, std::abs(v - 1.0));
      return m;
    }();
    for (int s = 0; s < sample_pairs; ++s) {
      Vec x, y;
      for (int a = 0; a < d; ++a) {
        x[a] = rng.next_double();
        y[a] = rng.next_double();
      }
      const double dist = periodic_distance(x, y, rho1.grid);
      if (dist < 1e-9) continue;
      const double modulus = dist * std::log(4.0 * std::sqrt(static_cast<double>(d)) / dist);
      for (int which = 0; which < 2; ++which) {
        const PoissonSolution& sol = which == 0 ? sol1 : sol2;
        const double dev = which == 0 ? dev1 : dev2;
        if (dev == 0.0) continue;
        const Vec gx = interpolate(sol.field, x);
        const Vec gy = interpolate(sol.field, y);
        const double lhs = eps2 * (gx - gy).norm();
        best_c = std::max(best_c, lhs / (modulus * dev));
      }
    }
    rep.log_lipschitz_c = best_c;
  }
  return rep;
}

double support_envelope_2d(double v0, double t, double epsilon, double alpha, double c_alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("support_envelope_2d: alpha outside (0,1)");
  if (v0 < 0.0 || t < 0.0 || !(epsilon > 0.0) || c_alpha < 0.0)
    throw std::invalid_argument("support_envelope_2d: invalid input");
  const double one_minus = 1.0 - alpha;
  const double base = c_alpha * std::pow(epsilon, -(alpha + 1.0)) * t + std::pow(1.0 + v0, one_minus);
  return std::pow(base, 1.0 / one_minus) - 1.0;
}

FieldBound2d field_bound_2d(double eta_l2, double eta_inf, double epsilon, double c2) {
  if (eta_l2 < 0.0 || eta_inf < 0.0 || !(epsilon > 0.0))
    throw std::invalid_argument("field_bound_2d: invalid input");
  FieldBound2d out;
  const double v_proxy = std::sqrt(eta_inf);  // inverts ||eta||_inf <= V^2
  const double log_arg = (1.0 + v_proxy) / epsilon;
  out.support_form = c2 * (1.0 + std::sqrt(std::max(0.0, std::log(log_arg))) / epsilon);
  const double r_opt = 1.0 / (eta_inf + 1.0);
  const double log_c = 4.0 * std::sqrt(2.0);
  out.optimized_r =
      c2 * (r_opt * (eta_inf + 1.0) +
            (eta_l2 + 1.0 / epsilon) * std::sqrt(std::max(0.0, std::log(log_c / (epsilon * r_opt)))));
  return out;
}

double support_envelope_3d(double v0_coeff, double epsilon, double gamma, double horizon, double c1) {
  if (!(horizon > 0.0)) throw std::invalid_argument("support_envelope_3d: horizon must be positive");
  if (!(epsilon > 0.0) || v0_coeff < 0.0 || gamma < 0.0 || c1 < 0.0)
    throw std::invalid_argument("support_envelope_3d: invalid input");
  const double base = v0_coeff * std::pow(epsilon, -gamma);
  const double c1e = c1 * std::pow(epsilon, -32.0 / 3.0);
  const double root =
      std::sqrt(c1e * c1e * std::pow(horizon, 4.0) + 4.0 * c1 * std::pow(epsilon, -(32.0 / 3.0 + gamma)));
  const double bootstrap_branch = base + (-c1e + root);
  const double short_time_branch = base + std::pow(horizon, -3.5);
  return std::max(bootstrap_branch, short_time_branch);
}

PerturbationThreshold phi_threshold(double epsilon, int d, double gamma, double beta, double k) {
  if (d != 2 && d != 3) throw std::invalid_argument("phi_threshold: d must be 2 or 3");
  if (!(epsilon > 0.0) || !(k > 0.0) || gamma < 0.0)
    throw std::invalid_argument("phi_threshold: invalid input");
  if (d == 2 && !(beta > 2.0)) throw std::invalid_argument("phi_threshold: beta must exceed 2 in 2D");
  PerturbationThreshold out;
  out.exponent = d == 2 ? 2.0 * (1.0 + std::max(beta, gamma)) : 2.0 + std::max(38.0, 3.0 * gamma);
  out.value = std::exp(-std::exp(k * std::pow(epsilon, -out.exponent)));
  return out;
}

}  // namespace quasipic
