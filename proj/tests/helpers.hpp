#pragma once

#include "quasipic/field.hpp"
#include "quasipic/grid.hpp"

namespace quasipic::testing {

// random band-limited real field: modes drawn up to |k|_inf <= band
inline GriddedField random_band_limited(const TorusGrid& g, int band, uint64_t seed,
                                        double amplitude = 1.0, double mean = 0.0) {
  CounterRng rng(seed);
  GriddedField f(g, 1);
  struct Mode {
    int k[3];
    double a, b;
  };
  std::vector<Mode> modes;
  for (int m = 0; m < 3 * band; ++m) {
    Mode mode{};
    bool zero = true;
    for (int a = 0; a < g.dim; ++a) {
      mode.k[a] = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(2 * band + 1)) - band;
      if (mode.k[a] != 0) zero = false;
    }
    if (zero) mode.k[0] = 1;
    mode.a = amplitude * rng.uniform(-1.0, 1.0);
    mode.b = amplitude * rng.uniform(-1.0, 1.0);
    modes.push_back(mode);
  }
  for (int64_t i = 0; i < f.cells(); ++i) {
    const Vec x = cell_center(i, g);
    double v = mean;
    for (const auto& m : modes) {
      double phase = 0.0;
      for (int a = 0; a < g.dim; ++a) phase += m.k[a] * x[a];
      phase *= 2.0 * M_PI;
      v += m.a * std::cos(phase) + m.b * std::sin(phase);
    }
    f.values[static_cast<size_t>(i)] = v;
  }
  return f;
}

inline ParticleEnsemble random_ensemble(int dim, int64_t n, uint64_t seed, double vspread = 1.0) {
  ParticleEnsemble e;
  e.dim = dim;
  e.seed = seed;
  CounterRng rng(seed);
  for (int64_t i = 0; i < n; ++i) {
    Vec x, v;
    for (int a = 0; a < dim; ++a) {
      x[a] = rng.next_double();
      v[a] = rng.uniform(-vspread, vspread);
    }
    e.positions.push_back(x);
    e.velocities.push_back(v);
    e.weights.push_back(1.0 / static_cast<double>(n));
  }
  return e;
}

inline GriddedField cosine_field(const TorusGrid& g, int axis, int mode, double amp, double mean = 0.0) {
  GriddedField f(g, 1);
  for (int64_t i = 0; i < f.cells(); ++i) {
    const Vec x = cell_center(i, g);
    f.values[static_cast<size_t>(i)] = mean + amp * std::cos(2.0 * M_PI * mode * x[axis]);
  }
  return f;
}

}  // namespace quasipic::testing
