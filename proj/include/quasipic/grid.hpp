#pragma once

#include <cstdint>
#include <stdexcept>

#include "quasipic/common.hpp"

namespace quasipic {

// Uniform grid on the unit torus [0,1)^d, cell-centered samples.
// Cell counts are powers of two so transforms stay radix friendly.
struct TorusGrid {
  int dim = 0;
  int cells = 0;      // per axis
  double spacing = 0.0;

  int64_t total_cells() const {
    int64_t n = 1;
    for (int a = 0; a < dim; ++a) n *= cells;
    return n;
  }
  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= spacing;
    return v;
  }
  bool operator==(const TorusGrid&) const = default;
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline TorusGrid make_grid(int dim, int cells) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("grid dim must be 1, 2 or 3");
  if (cells < 4 || !is_power_of_two(cells))
    throw std::invalid_argument("cells per axis must be a power of two >= 4");
  return TorusGrid{dim, cells, 1.0 / cells};
}

// wrap a coordinate into [0,1)
inline double wrap01(double x) {
  double y = x - std::floor(x);
  if (y >= 1.0) y = 0.0;  // guards x = -1e-17 rounding up
  return y;
}

inline Vec wrap01(Vec x, int dim) {
  for (int a = 0; a < dim; ++a) x[a] = wrap01(x[a]);
  return x;
}

// signed displacement to the nearest periodic image, components in [-1/2, 1/2)
inline Vec torus_displacement(const Vec& x, const Vec& y, int dim) {
  Vec d;
  for (int a = 0; a < dim; ++a) {
    double z = x[a] - y[a];
    z -= std::round(z);
    if (z == 0.5) z = -0.5;
    d[a] = z;
  }
  return d;
}

// geodesic distance on T^d, bounded by sqrt(d)/2
inline double periodic_distance(const Vec& x, const Vec& y, const TorusGrid& grid) {
  return torus_displacement(wrap01(x, grid.dim), wrap01(y, grid.dim), grid.dim).norm();
}

// Weighted point cloud on T^d x R^d. Construction-time sampling is seeded;
// the seed is carried along for provenance.
struct ParticleEnsemble {
  int dim = 0;
  std::vector<Vec> positions;   // in [0,1)^d
  std::vector<Vec> velocities;  // in R^d
  std::vector<double> weights;  // nonnegative, sum = total mass
  uint64_t seed = 0;

  size_t size() const { return positions.size(); }

  double total_mass() const {
    KahanSum s;
    for (double w : weights) s.add(w);
    return s.value();
  }

  void wrap_positions() {
    for (auto& x : positions) x = wrap01(x, dim);
  }

  void check_consistent() const {
    if (positions.size() != velocities.size() || positions.size() != weights.size())
      throw std::invalid_argument("ensemble arrays must have equal length");
  }
};

inline double support_radius(const ParticleEnsemble& e) {
  if (e.size() == 0) throw std::invalid_argument("support radius of an empty ensemble");
  double m = 0.0;
  for (const auto& v : e.velocities) m = std::max(m, v.norm());
  return m;
}

}  // namespace quasipic
