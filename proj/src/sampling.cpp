#include "quasipic/sampling.hpp"

namespace quasipic {

GriddedField AnalyticDensity::spatial_field(const TorusGrid& grid) const {
  if (grid.dim != dim) throw std::invalid_argument("density/grid dimension mismatch");
  GriddedField f(grid, 1);
  for (int64_t i = 0; i < f.cells(); ++i) f.values[static_cast<size_t>(i)] = spatial(cell_center(i, grid));
  return f;
}

namespace {

Vec draw_velocity(const VelocityProfile& p, int dim, CounterRng& rng) {
  switch (p.kind) {
    case VelocityProfile::Kind::Dirac:
      return p.center;
    case VelocityProfile::Kind::UniformBall: {
      for (;;) {
        Vec u;
        for (int a = 0; a < dim; ++a) u[a] = rng.uniform(-p.radius, p.radius);
        if (u.norm() <= p.radius) return p.center + u;
      }
    }
    case VelocityProfile::Kind::TruncatedGaussian: {
      for (;;) {
        Vec u;
        for (int a = 0; a < dim; ++a) u[a] = p.vth * rng.normal();
        if (u.norm() <= p.radius) return p.center + u;
      }
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace

ParticleEnsemble sample_ensemble(const AnalyticDensity& density, int64_t n, uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("sample_ensemble: particle count must be positive");
  const auto& vel = density.velocity;
  if (!std::isfinite(vel.support_bound()))
    throw std::invalid_argument("sample_ensemble: velocity support must be bounded");
  if (vel.kind != VelocityProfile::Kind::Dirac && !(vel.radius > 0.0))
    throw std::invalid_argument("sample_ensemble: velocity cutoff must be positive");

  const double sup = density.spatial_sup_bound();
  ParticleEnsemble e;
  e.dim = density.dim;
  e.seed = seed;
  e.positions.resize(static_cast<size_t>(n));
  e.velocities.resize(static_cast<size_t>(n));
  e.weights.assign(static_cast<size_t>(n), 1.0 / static_cast<double>(n));

  for (int64_t i = 0; i < n; ++i) {
    CounterRng rng(seed, static_cast<uint64_t>(i));
    Vec x;
    for (;;) {
      for (int a = 0; a < density.dim; ++a) x[a] = rng.next_double();
      const double f = density.spatial(x);
      if (f < -1e-12) throw std::invalid_argument("sample_ensemble: density is negative");
      if (rng.next_double() * sup < f) break;
    }
    e.positions[static_cast<size_t>(i)] = x;
    e.velocities[static_cast<size_t>(i)] = draw_velocity(vel, density.dim, rng);
  }
  return e;
}

namespace {

// plain composite Simpson, refined until stable
double simpson(double a, double b, const auto& f) {
  double prev = 0.0;
  for (int n = 64; n <= 1 << 20; n *= 2) {
    const double h = (b - a) / n;
    KahanSum s;
    s.add(f(a));
    s.add(f(b));
    for (int i = 1; i < n; ++i) s.add((i % 2 ? 4.0 : 2.0) * f(a + i * h));
    const double val = s.value() * h / 3.0;
    if (n > 64 && std::abs(val - prev) <= 1e-12 * std::max(1.0, std::abs(val))) return val;
    prev = val;
  }
  return prev;
}

}  // namespace

double velocity_second_moment(const VelocityProfile& p, int dim) {
  const double drift2 = p.center.norm2();
  switch (p.kind) {
    case VelocityProfile::Kind::Dirac:
      return drift2;
    case VelocityProfile::Kind::UniformBall:
      return drift2 + p.radius * p.radius * dim / (dim + 2.0);
    case VelocityProfile::Kind::TruncatedGaussian: {
      const double rmax = p.radius / p.vth;
      const double num = simpson(0.0, rmax, [dim](double r) {
        return std::pow(r, dim + 1) * std::exp(-0.5 * r * r);
      });
      const double den = simpson(0.0, rmax, [dim](double r) {
        return std::pow(r, dim - 1) * std::exp(-0.5 * r * r);
      });
      return drift2 + p.vth * p.vth * num / den;
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace quasipic
