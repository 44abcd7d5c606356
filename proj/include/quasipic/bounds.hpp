#pragma once

#include <numeric>

#include "quasipic/poisson.hpp"

namespace quasipic {

// exact rational arithmetic for the 3D bootstrap exponent chain
struct Rational {
  long long num = 0;
  long long den = 1;

  Rational() = default;
  Rational(long long n, long long d) : num(n), den(d) {
    if (den == 0) throw std::invalid_argument("rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  bool operator==(const Rational&) const = default;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// exponent map of the bootstrap iteration: beta -> 2 beta / 3
inline Rational batt_rein_exponent(Rational beta) {
  if (beta.num <= 0) throw std::invalid_argument("batt_rein_exponent: beta must be positive");
  return Rational(2 * beta.num, 3 * beta.den);
}

// Gronwall rate
//   A = [1 + eps^-2 sqrt(rho2_inf) max(rho1_inf, rho2_inf)^{1/2}] + dev1_inf / eps^2
// with dev1_inf = ||rho1 - 1||_inf; always >= 1
double gronwall_rate(double rho2_inf, double rho_max_inf, double rho1_dev_inf, double epsilon);

// concave modulus H: z log^2(16 d / z) on [0, d], constant d log^2(16) above
double log_modulus(double z, int d);

// closed-form solution of Q' = c0 A Q log(16 d / Q):
//   F[z] = 16 d exp( log(z / 16 d) exp(-c0 int A) )
// The sign in the inner exponential is the one consistent with the ODE; the
// variant with a positive sign is available for reference and is not used by
// the envelopes.
double gronwall_closed_form(double z, double a_integral, double c0, int d,
                            bool positive_exponent_variant = false);

// reference ODE integration: Q' = c0 A Q log(16 d / Q) while Q <= d,
// Q' = c0 A Q above, A piecewise linear through the samples; RK4 with step
// halving until the relative change drops below 1e-8
std::vector<double> gronwall_ode_solve(double q0, std::span<const double> times,
                                       std::span<const double> a_values, double c0, int d);

struct StabilityEnvelope {
  double w2_initial = 0.0;
  double c0 = 1.0;
  int d = 2;
  double switch_a = std::numeric_limits<double>::infinity();  // int A at the branch switch
  std::vector<double> times;
  std::vector<double> a_integral;  // cumulative trapezoid of A
  std::vector<double> envelope;    // envelope on W2 (not squared)
};

// squared envelope at cumulative rate a: the closed form while it stays
// below d, then exponential growth anchored at the crossing (continuous);
// initial square above d grows exponentially from the start
double envelope_squared_at(double z0_squared, double a_integral, double c0, int d);

StabilityEnvelope stability_envelope(double w2_initial, std::span<const double> times,
                                     std::span<const double> a_values, double c0, int d);

struct LoeperReport {
  double gradient_l2_lhs = 0.0;   // eps^2 ||grad Psi_1 - grad Psi_2||_2
  double gradient_l2_rhs = 0.0;   // max(||rho_i||_inf)^{1/2} W2(rho_1, rho_2)
  double ratio = 0.0;             // lhs / rhs (0 when rhs = 0)
  double w2_densities = 0.0;      // sampled W2 between the spatial densities
  double log_lipschitz_c = 0.0;   // smallest admissible C over sampled pairs
  int sample_pairs = 0;
};

LoeperReport loeper_field_check(const GriddedField& rho1, const GriddedField& rho2, double epsilon,
                                int sample_pairs, uint64_t seed = 7);

// 2D support envelope in the 1/eps-scaled frame; unit-torus callers pass
// t / eps:
//   V(t) <= (c_alpha eps^-(alpha+1) t + (1 + v0)^{1-alpha})^{1/(1-alpha)} - 1
double support_envelope_2d(double v0, double t, double epsilon, double alpha, double c_alpha);

struct FieldBound2d {
  double support_form = 0.0;   // c2 (1 + eps^-1 log^{1/2}(eps^-1 (1 + V)))
  double optimized_r = 0.0;    // intermediate bound at R = 1 / (||eta||_inf + 1)
};

// sup-field bound from the density norms; the support proxy inverts
// ||eta||_inf <= V^2
FieldBound2d field_bound_2d(double eta_l2, double eta_inf, double epsilon, double c2);

// 3D support envelope in the scaled frame at horizon T:
//   max{ v0 eps^-g + [-c1 eps^-32/3 + sqrt(c1^2 eps^-64/3 T^4 + 4 c1 eps^-(32/3+g))],
//        v0 eps^-g + T^-7/2 }
double support_envelope_3d(double v0_coeff, double epsilon, double gamma, double horizon, double c1);

struct PerturbationThreshold {
  double value = 0.0;     // exp(-exp(k eps^-s))
  double exponent = 0.0;  // s
};

// admissible initial-perturbation scale; double-exponentially small, with
// s = 2 (1 + max(beta, gamma)) in 2D and s = 2 + max(38, 3 gamma) in 3D
PerturbationThreshold phi_threshold(double epsilon, int d, double gamma, double beta, double k);

}  // namespace quasipic
