#pragma once

#include <complex>
#include <vector>

#include "quasipic/grid.hpp"

namespace quasipic {

// Real samples on the cell-center lattice x_j = j * spacing (cell j covers
// [x_j - h/2, x_j + h/2) on the torus). Component-major storage, cells
// row-major with the last axis fastest.
struct GriddedField {
  TorusGrid grid;
  int components = 1;  // 1 (scalar) or grid.dim (vector)
  std::vector<double> values;

  GriddedField() = default;
  GriddedField(const TorusGrid& g, int comps)
      : grid(g), components(comps), values(static_cast<size_t>(comps) * g.total_cells(), 0.0) {}

  int64_t cells() const { return grid.total_cells(); }
  double* component(int c) { return values.data() + static_cast<int64_t>(c) * cells(); }
  const double* component(int c) const { return values.data() + static_cast<int64_t>(c) * cells(); }

  double& at(int c, int64_t idx) { return values[static_cast<size_t>(c) * cells() + idx]; }
  double at(int c, int64_t idx) const { return values[static_cast<size_t>(c) * cells() + idx]; }

  double max_abs() const;
  double l2_norm() const;    // sqrt(int |f|^2 dx), midpoint quadrature
  double mean(int c = 0) const;
};

// Fourier coefficients on the same grid, f(x) = sum_k fhat(k) e^{2 pi i k.x}.
// Storage mirrors GriddedField; index j along an axis carries wavenumber
// k = j for j <= n/2 and k = j - n otherwise.
struct SpectralField {
  TorusGrid grid;
  int components = 1;
  std::vector<std::complex<double>> coefficients;

  SpectralField() = default;
  SpectralField(const TorusGrid& g, int comps)
      : grid(g), components(comps), coefficients(static_cast<size_t>(comps) * g.total_cells()) {}

  int64_t cells() const { return grid.total_cells(); }
  std::complex<double>* component(int c) { return coefficients.data() + static_cast<int64_t>(c) * cells(); }
  const std::complex<double>* component(int c) const {
    return coefficients.data() + static_cast<int64_t>(c) * cells();
  }
};

// signed wavenumber of FFT bin j on an axis with n cells
inline int signed_mode(int j, int n) { return j <= n / 2 ? j : j - n; }

// Iteration helper: decode flat index into per-axis bins.
inline void decode_index(int64_t idx, const TorusGrid& g, int bins[3]) {
  bins[0] = bins[1] = bins[2] = 0;
  for (int a = g.dim - 1; a >= 0; --a) {
    bins[a] = static_cast<int>(idx % g.cells);
    idx /= g.cells;
  }
}

inline int64_t encode_index(const int bins[3], const TorusGrid& g) {
  int64_t idx = 0;
  for (int a = 0; a < g.dim; ++a) idx = idx * g.cells + bins[a];
  return idx;
}

// cell-center coordinate of flat index
inline Vec cell_center(int64_t idx, const TorusGrid& g) {
  int bins[3];
  decode_index(idx, g, bins);
  Vec x;
  for (int a = 0; a < g.dim; ++a) x[a] = bins[a] * g.spacing;
  return x;
}

SpectralField forward_transform(const GriddedField& f);
GriddedField inverse_transform(const SpectralField& fhat);

// inverse transform keeping the real part; asserts the imaginary leakage is
// at round-off level (inputs must be Hermitian-symmetric)
GriddedField inverse_transform_real(const SpectralField& fhat, double imag_tol = 1e-9);

// spectral derivative ops; Nyquist bins are treated as underivable and dropped
SpectralField gradient(const SpectralField& scalar);
SpectralField divergence(const SpectralField& vec);
SpectralField laplacian(const SpectralField& f);

// zero all modes with |k| > n/3 on any axis (2/3-rule dealiasing)
void dealias_two_thirds(SpectralField& f);

// sum_k |fhat(k)| delta^{|k|_1}; the multi-index exponent is the l1 norm of
// the signed mode
double b_delta_norm(const SpectralField& fhat, double delta);

// Parseval sum: sum_k |fhat(k)|^2 (equals int |f|^2 dx)
double spectral_energy(const SpectralField& fhat);

// point evaluation of the trig polynomial (exact, O(#modes)); used by tests
// and samplers that need off-lattice values of analytic data
double evaluate_mode_sum(const SpectralField& fhat, int component, const Vec& x);

}  // namespace quasipic
