#pragma once

#include "quasipic/field.hpp"

namespace quasipic {

// Cloud-in-cell stencil: 2^d corner weights of the cell-center lattice
// around x. Weights are a tensor product of (1-f, f) factors and sum to one.
struct CicStencil {
  int corners = 0;
  int64_t index[8];
  double weight[8];
};

inline CicStencil cic_stencil(const Vec& x, const TorusGrid& g) {
  int base[3] = {0, 0, 0};
  double frac[3] = {0.0, 0.0, 0.0};
  for (int a = 0; a < g.dim; ++a) {
    const double s = wrap01(x[a]) * g.cells;
    double fl = std::floor(s);
    frac[a] = s - fl;
    int i = static_cast<int>(fl);
    if (i >= g.cells) {  // s == cells after rounding
      i = 0;
      frac[a] = 0.0;
    }
    base[a] = i;
  }
  CicStencil st;
  st.corners = 1 << g.dim;
  for (int c = 0; c < st.corners; ++c) {
    int bins[3] = {0, 0, 0};
    double w = 1.0;
    for (int a = 0; a < g.dim; ++a) {
      const int up = (c >> a) & 1;
      bins[a] = (base[a] + up) % g.cells;
      w *= up ? frac[a] : 1.0 - frac[a];
    }
    st.index[c] = encode_index(bins, g);
    st.weight[c] = w;
  }
  return st;
}

// charge deposition; sum rho * cellvol reproduces the total mass up to
// round-off regardless of worker count (fixed block-order reduction)
GriddedField deposit(const ParticleEnsemble& e, const TorusGrid& grid);

// multilinear periodic interpolation, exact for per-cell affine fields
inline Vec interpolate(const GriddedField& f, const Vec& x) {
  const CicStencil st = cic_stencil(x, f.grid);
  Vec out;
  for (int c = 0; c < f.components; ++c) {
    double v = 0.0;
    for (int k = 0; k < st.corners; ++k) v += st.weight[k] * f.component(c)[st.index[k]];
    out[c] = v;
  }
  return out;
}

inline double interpolate_scalar(const GriddedField& f, const Vec& x) { return interpolate(f, x)[0]; }

}  // namespace quasipic
