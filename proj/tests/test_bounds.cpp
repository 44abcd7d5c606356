#include <doctest.h>

#include "helpers.hpp"
#include "quasipic/bounds.hpp"

using namespace quasipic;
using namespace quasipic::testing;

namespace {

// independent RK4 on Q' = c0 A Q log(16 d / Q) with constant A; test-local by
// intent, does not touch the library integrator
double rk4_reference(double q0, double a, double c0, int d, double t_end, int steps) {
  auto rhs = [&](double q) {
    return q >= static_cast<double>(d) ? c0 * a * q : c0 * a * q * std::log(16.0 * d / q);
  };
  double q = q0;
  const double h = t_end / steps;
  for (int i = 0; i < steps; ++i) {
    const double k1 = rhs(q);
    const double k2 = rhs(q + 0.5 * h * k1);
    const double k3 = rhs(q + 0.5 * h * k2);
    const double k4 = rhs(q + h * k3);
    q += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return q;
}

}  // namespace

TEST_CASE("gronwall rate: uniform densities, hand value, vacuum") {
  CHECK(gronwall_rate(1.0, 1.0, 0.0, 1.0) == doctest::Approx(2.0));
  CHECK(gronwall_rate(4.0, 4.0, 3.0, 0.5) == doctest::Approx(29.0));
  CHECK(gronwall_rate(0.0, 0.0, 0.0, 0.25) == doctest::Approx(1.0));
  CHECK_THROWS(gronwall_rate(-1.0, 0.0, 0.0, 1.0));
  CHECK_THROWS(gronwall_rate(1.0, 1.0, 0.0, 0.0));
}

TEST_CASE("log modulus: continuity at the branch point and hand value") {
  for (int d : {1, 2, 3}) {
    const double at_d = log_modulus(static_cast<double>(d), d);
    const double l16 = std::log(16.0);
    CHECK(at_d == doctest::Approx(d * l16 * l16).epsilon(1e-13));
    CHECK(log_modulus(static_cast<double>(d) - 1e-12, d) == doctest::Approx(at_d).epsilon(1e-9));
    CHECK(log_modulus(static_cast<double>(d) + 5.0, d) == doctest::Approx(at_d).epsilon(1e-13));
  }
  CHECK(log_modulus(0.0, 2) == 0.0);
  const double l32 = std::log(32.0);
  CHECK(log_modulus(1.0, 2) == doctest::Approx(l32 * l32).epsilon(1e-13));
  CHECK(log_modulus(1.0, 2) == doctest::Approx(12.0113).epsilon(1e-4));
}

TEST_CASE("log modulus is concave and increasing on [0, d]") {
  const int d = 2;
  double prev = -1.0;
  for (int i = 0; i <= 400; ++i) {
    const double z = d * i / 400.0;
    const double h = log_modulus(z, d);
    CHECK(h >= prev - 1e-12);
    prev = h;
    if (i >= 2) {
      const double zl = d * (i - 2) / 400.0, zm = d * (i - 1) / 400.0;
      CHECK(log_modulus(zm, d) >= 0.5 * (log_modulus(zl, d) + h) - 1e-10);
    }
  }
}

TEST_CASE("closed form: identity at zero, fixed point, ODE agreement") {
  CHECK(gronwall_closed_form(0.3, 0.0, 1.0, 2) == doctest::Approx(0.3).epsilon(1e-13));
  CHECK(gronwall_closed_form(32.0, 5.0, 1.0, 2) == doctest::Approx(32.0).epsilon(1e-13));
  CHECK_THROWS(gronwall_closed_form(0.0, 1.0, 1.0, 2));
  CHECK_THROWS(gronwall_closed_form(33.0, 1.0, 1.0, 2));

  // z = 0.01, d = 2, c0 = 1, A = 2, t = 0.5
  const double expect = rk4_reference(0.01, 2.0, 1.0, 2, 0.5, 1 << 14);
  CHECK(gronwall_closed_form(0.01, 2.0 * 0.5, 1.0, 2) == doctest::Approx(expect).epsilon(1e-6));

  // the typeset-sign variant decreases in time and is not the ODE solution
  const double variant = gronwall_closed_form(0.01, 1.0, 1.0, 2, true);
  CHECK(variant < 0.01);
}

TEST_CASE("ode oracle: constant A closed forms on both branches") {
  const std::vector<double> times{0.0, 0.25, 0.5, 0.75, 1.0};
  const std::vector<double> a_const(times.size(), 2.0);

  // A = 0 keeps Q frozen
  const std::vector<double> zeros(times.size(), 0.0);
  const auto frozen = gronwall_ode_solve(0.37, times, zeros, 1.0, 2);
  for (double q : frozen) CHECK(q == doctest::Approx(0.37).epsilon(1e-12));

  // starting at d the growth is purely exponential
  const auto exp_regime = gronwall_ode_solve(2.0, times, a_const, 1.0, 2);
  for (size_t i = 0; i < times.size(); ++i)
    CHECK(exp_regime[i] == doctest::Approx(2.0 * std::exp(2.0 * times[i])).epsilon(1e-7));

  // below d the oracle follows the closed form until the crossing, then the
  // exponential continuation
  const auto mixed = gronwall_ode_solve(1e-4, times, a_const, 1.0, 2);
  for (size_t i = 0; i < times.size(); ++i) {
    const double a_int = 2.0 * times[i];
    const double f = gronwall_closed_form(1e-4, a_int, 1.0, 2);
    if (f <= 2.0) CHECK(mixed[i] == doctest::Approx(f).epsilon(1e-6));
  }
  CHECK_THROWS(gronwall_ode_solve(0.0, times, a_const, 1.0, 2));
}

TEST_CASE("closed form matches the oracle over random draws below d") {
  CounterRng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + static_cast<int>(rng.next_u64() % 2);
    const double z = std::pow(10.0, rng.uniform(-6.0, 0.0)) * d * 0.5;
    const double c0 = rng.uniform(1.0, 3.0);
    const double horizon = rng.uniform(0.1, 1.0);
    std::vector<double> times, a_vals;
    const int samples = 9;
    for (int i = 0; i < samples; ++i) {
      times.push_back(horizon * i / (samples - 1));
      a_vals.push_back(rng.uniform(0.5, 4.0));
    }
    const auto oracle = gronwall_ode_solve(z, times, a_vals, c0, d);
    double a_int = 0.0;
    for (int i = 1; i < samples; ++i) {
      a_int += 0.5 * (a_vals[static_cast<size_t>(i)] + a_vals[static_cast<size_t>(i - 1)]) *
               (times[static_cast<size_t>(i)] - times[static_cast<size_t>(i - 1)]);
      const double f = gronwall_closed_form(z, a_int, c0, d);
      if (f <= static_cast<double>(d))
        CHECK(std::abs(f - oracle[static_cast<size_t>(i)]) / f < 1e-6);
    }
  }
}

TEST_CASE("stability envelope: degenerate inputs and branch structure") {
  const std::vector<double> times{0.0, 0.5, 1.0};
  const std::vector<double> a_vals{2.0, 2.0, 2.0};

  const StabilityEnvelope zero = stability_envelope(0.0, times, a_vals, 1.5, 2);
  for (double v : zero.envelope) CHECK(v == 0.0);

  const std::vector<double> no_rate{0.0, 0.0, 0.0};
  const StabilityEnvelope frozen = stability_envelope(0.2, times, no_rate, 1.5, 2);
  for (double v : frozen.envelope) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));

  // large initial data grow exponentially from the start
  const StabilityEnvelope big = stability_envelope(3.0, times, a_vals, 1.0, 2);
  for (size_t i = 0; i < times.size(); ++i)
    CHECK(big.envelope[i] ==
          doctest::Approx(std::sqrt(9.0 * std::exp(2.0 * times[i]))).epsilon(1e-10));

  // envelope is nondecreasing and starts at the initial distance
  const StabilityEnvelope env = stability_envelope(0.05, times, a_vals, 1.5, 2);
  CHECK(env.envelope.front() == doctest::Approx(0.05).epsilon(1e-12));
  for (size_t i = 1; i < env.envelope.size(); ++i) CHECK(env.envelope[i] >= env.envelope[i - 1]);

  CHECK_THROWS(stability_envelope(-1.0, times, a_vals, 1.0, 2));
}

TEST_CASE("stability envelope is continuous across the branch switch") {
  const int d = 2;
  const double c0 = 1.3;
  const double z0 = 0.09;  // squared initial distance
  // bisect the switching rate integral a* where the closed form reaches d
  double lo = 0.0, hi = 50.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (gronwall_closed_form(z0, mid, c0, d) < static_cast<double>(d) ? lo : hi) = mid;
  }
  const double left = envelope_squared_at(z0, lo, c0, d);
  const double right = envelope_squared_at(z0, hi, c0, d);
  CHECK(std::abs(left - right) < 1e-8);
  CHECK(left == doctest::Approx(static_cast<double>(d)).epsilon(1e-8));
}

TEST_CASE("envelope dominates the ode oracle") {
  CounterRng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2;
    const double w2 = rng.uniform(0.01, 1.2);
    std::vector<double> times, a_vals;
    for (int i = 0; i < 9; ++i) {
      times.push_back(i * 0.125);
      a_vals.push_back(rng.uniform(0.5, 6.0));
    }
    const StabilityEnvelope env = stability_envelope(w2, times, a_vals, 1.5, d);
    const auto oracle = gronwall_ode_solve(w2 * w2, times, a_vals, 1.5, d);
    for (size_t i = 0; i < times.size(); ++i)
      CHECK(env.envelope[i] * env.envelope[i] >= oracle[i] * (1.0 - 1e-6));
  }
}

TEST_CASE("2D support envelope: initial value, hand value, monotonicity") {
  CHECK(support_envelope_2d(1.7, 0.0, 0.5, 0.5, 2.0) == doctest::Approx(1.7).epsilon(1e-12));
  CHECK(support_envelope_2d(0.0, 1.0, 1.0, 0.5, 1.0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK_THROWS(support_envelope_2d(1.0, 1.0, 1.0, 1.5, 1.0));

  double prev = -1.0;
  for (int i = 0; i <= 50; ++i) {
    const double v = support_envelope_2d(1.0, i * 0.1, 0.5, 0.4, 1.0);
    CHECK(v >= prev);
    prev = v;
  }
  for (double eps : {0.5, 0.25, 0.125}) {
    const double lo = support_envelope_2d(1.0, 1.0, eps, 0.4, 1.0);
    const double hi = support_envelope_2d(1.0, 1.0, eps * 2.0, 0.4, 1.0);
    CHECK(lo >= hi);
  }
}

TEST_CASE("2D support envelope satisfies the integral inequality") {
  const double eps = 0.5, alpha = 0.4, c_alpha = 0.8, v0 = 0.3;
  CounterRng rng(33);
  for (int trial = 0; trial < 40; ++trial) {
    const double t1 = rng.uniform(0.0, 2.0);
    const double t2 = t1 + rng.uniform(0.01, 1.0);
    // quadrature of the right side along the envelope
    const int n = 4000;
    const double h = (t2 - t1) / n;
    KahanSum integral;
    for (int i = 0; i <= n; ++i) {
      const double t = t1 + i * h;
      const double w = (i == 0 || i == n) ? 0.5 : 1.0;
      integral.add(w * std::pow(1.0 + support_envelope_2d(v0, t, eps, alpha, c_alpha), alpha));
    }
    const double rhs = support_envelope_2d(v0, t1, eps, alpha, c_alpha) +
                       c_alpha * std::pow(eps, -(1.0 + alpha)) * integral.value() * h;
    CHECK(support_envelope_2d(v0, t2, eps, alpha, c_alpha) >= rhs - 1e-6);
  }
}

TEST_CASE("2D field bound: baseline and monotonicity") {
  const double eps = 0.25, c2 = 1.0;
  const FieldBound2d base = field_bound_2d(0.0, 0.0, eps, c2);
  CHECK(base.support_form ==
        doctest::Approx(c2 * (1.0 + std::sqrt(std::log(1.0 / eps)) / eps)).epsilon(1e-12));
  double prev = 0.0;
  for (double eta : {0.0, 1.0, 4.0, 9.0, 25.0}) {
    const double b = field_bound_2d(1.0, eta, eps, c2).support_form;
    CHECK(b >= prev);
    prev = b;
  }
  CHECK(field_bound_2d(1.0, 1.0, eps, c2).optimized_r > 0.0);
  CHECK_THROWS(field_bound_2d(-1.0, 0.0, eps, c2));
}

TEST_CASE("batt-rein exponent chain is exact") {
  const Rational start(4, 9);
  const Rational s1 = batt_rein_exponent(start);
  CHECK(s1 == Rational(8, 27));
  const Rational s2 = batt_rein_exponent(s1);
  CHECK(s2 == Rational(16, 81));
  const Rational s3 = batt_rein_exponent(s2);
  CHECK(s3 == Rational(32, 243));
  // 32/243 < 1/6 exactly: 32 * 6 < 243
  CHECK(s3.num * 6 < s3.den);
  // exactly three applications reach below 1/6
  CHECK(s1.num * 6 > s1.den);
  CHECK(s2.num * 6 > s2.den);
  CHECK_THROWS(batt_rein_exponent(Rational(0, 1)));
}

TEST_CASE("3D support envelope: limits and hand value") {
  // horizon -> infinity pushes the short-time branch to the base value
  const double far = support_envelope_3d(1.0, 1.0, 0.0, 1e8, 0.0);
  CHECK(far == doctest::Approx(1.0).epsilon(1e-10));
  // c1 = 0 kills the bootstrap branch
  CHECK(support_envelope_3d(2.0, 0.5, 1.0, 1.0, 0.0) ==
        doctest::Approx(std::max(2.0 / 0.5 + 0.0, 2.0 / 0.5 + 1.0)).epsilon(1e-12));
  // eps = 1, gamma = 0, c1 = 1, v0 = 1, T = 1
  CHECK(support_envelope_3d(1.0, 1.0, 0.0, 1.0, 1.0) ==
        doctest::Approx(std::sqrt(5.0) ).epsilon(1e-12));
  CHECK_THROWS(support_envelope_3d(1.0, 1.0, 0.0, 0.0, 1.0));
}

TEST_CASE("perturbation thresholds: exponents and monotone decay") {
  const PerturbationThreshold t2 = phi_threshold(0.5, 2, 1.0, 3.0, 1.0);
  CHECK(t2.exponent == doctest::Approx(8.0));
  const PerturbationThreshold t3 = phi_threshold(0.5, 3, 1.0, 3.0, 1.0);
  CHECK(t3.exponent == doctest::Approx(40.0));
  const PerturbationThreshold g3 = phi_threshold(0.5, 3, 20.0, 3.0, 1.0);
  CHECK(g3.exponent == doctest::Approx(62.0));

  double prev = 1.0;
  for (double eps : {0.9, 0.8, 0.7, 0.6}) {
    const PerturbationThreshold t = phi_threshold(eps, 2, 1.0, 3.0, 1.0);
    CHECK(t.value < prev);
    CHECK(t.value > 0.0);
    prev = t.value;
  }
  CHECK_THROWS(phi_threshold(0.5, 4, 1.0, 3.0, 1.0));
  CHECK_THROWS(phi_threshold(0.5, 2, 1.0, 2.0, 1.0));
}

TEST_CASE("loeper field check on trivial and single-mode densities") {
  const TorusGrid g = make_grid(2, 64);
  GriddedField uniform(g, 1);
  std::fill(uniform.values.begin(), uniform.values.end(), 1.0);

  const LoeperReport trivial = loeper_field_check(uniform, uniform, 0.5, 200);
  CHECK(trivial.gradient_l2_lhs < 1e-12);
  CHECK(trivial.log_lipschitz_c == 0.0);

  const GriddedField bump = cosine_field(g, 0, 2, 0.3, 1.0);
  const LoeperReport same = loeper_field_check(bump, bump, 0.5, 200);
  CHECK(same.gradient_l2_lhs < 1e-12);

  const GriddedField other = cosine_field(g, 1, 1, 0.3, 1.0);
  const LoeperReport rep = loeper_field_check(bump, other, 0.5, 400);
  CHECK(rep.gradient_l2_lhs > 0.0);
  CHECK(rep.w2_densities > 0.0);
  CHECK(rep.ratio <= 1.05);
  CHECK(rep.log_lipschitz_c > 0.0);

  GriddedField negative = uniform;
  negative.values[0] = 1.5;  // mean off unity
  CHECK_THROWS(loeper_field_check(negative, uniform, 0.5, 10));
}
