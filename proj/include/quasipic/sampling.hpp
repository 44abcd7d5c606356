#pragma once

#include <array>
#include <limits>

#include "quasipic/field.hpp"

namespace quasipic {

// Velocity marginal of an analytic initial density. Every profile has
// bounded support; distributions without a cutoff are not admissible input.
struct VelocityProfile {
  enum class Kind { Dirac, UniformBall, TruncatedGaussian };
  Kind kind = Kind::Dirac;
  Vec center{};          // mean velocity
  double radius = 0.0;   // ball radius / gaussian cutoff
  double vth = 1.0;      // gaussian width

  double support_bound() const { return center.norm() + radius; }
};

// Separable analytic density: spatial trig polynomial (mean one) times a
// velocity profile. Trig data keeps every B_delta norm finite by
// construction.
struct AnalyticDensity {
  int dim = 2;
  struct Mode {
    std::array<int, 3> k{0, 0, 0};
    double cos_amp = 0.0;
    double sin_amp = 0.0;
  };
  std::vector<Mode> modes;
  VelocityProfile velocity;

  double spatial(const Vec& x) const {
    double v = 1.0;
    for (const auto& m : modes) {
      double phase = 0.0;
      for (int a = 0; a < dim; ++a) phase += m.k[static_cast<size_t>(a)] * x[a];
      phase *= 2.0 * M_PI;
      v += m.cos_amp * std::cos(phase) + m.sin_amp * std::sin(phase);
    }
    return v;
  }

  double spatial_sup_bound() const {
    double s = 1.0;
    for (const auto& m : modes) s += std::hypot(m.cos_amp, m.sin_amp);
    return s;
  }

  // samples the spatial part onto a grid
  GriddedField spatial_field(const TorusGrid& grid) const;
};

// n equal-weight particles, reproducible bit-for-bit from the seed. Each
// particle owns its own counter stream, so rejection retries never shift
// the draws of other particles.
ParticleEnsemble sample_ensemble(const AnalyticDensity& density, int64_t n, uint64_t seed);

// velocity second moment E|v|^2 of the profile (closed forms; the truncated
// gaussian goes through an incomplete-gamma expression)
double velocity_second_moment(const VelocityProfile& p, int dim);

}  // namespace quasipic
