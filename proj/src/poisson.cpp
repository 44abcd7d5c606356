#include "quasipic/poisson.hpp"

#include <map>
#include <mutex>

namespace quasipic {

PoissonSolution solve_potential(const GriddedField& rho, double epsilon) {
  if (rho.components != 1) throw std::invalid_argument("solve_potential: rho must be scalar");
  if (!(epsilon > 0.0)) throw std::invalid_argument("solve_potential: epsilon must be > 0");

  const TorusGrid& g = rho.grid;
  SpectralField rho_hat = forward_transform(rho);

  SpectralField u_hat(g, 1);
  const double inv_eps2 = 1.0 / (epsilon * epsilon);
  for (int64_t i = 0; i < g.total_cells(); ++i) {
    int bins[3];
    decode_index(i, g, bins);
    double k2 = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      double k = signed_mode(bins[a], g.cells);
      k2 += k * k;
    }
    if (k2 == 0.0) {
      u_hat.coefficients[static_cast<size_t>(i)] = 0.0;
    } else {
      u_hat.coefficients[static_cast<size_t>(i)] =
          rho_hat.coefficients[static_cast<size_t>(i)] * (inv_eps2 / (4.0 * M_PI * M_PI * k2));
    }
  }

  SpectralField e_hat = gradient(u_hat);
  for (auto& z : e_hat.coefficients) z = -z;

  PoissonSolution sol;
  sol.epsilon = epsilon;
  sol.potential = inverse_transform_real(u_hat);
  sol.field = inverse_transform_real(e_hat);
  sol.potential_hat = std::move(u_hat);
  sol.field_energy = 0.5 * epsilon * epsilon * spectral_energy(e_hat);
  return sol;
}

double residual(const GriddedField& rho, const PoissonSolution& sol) {
  if (rho.grid != sol.potential.grid) throw std::invalid_argument("residual: grid mismatch");
  SpectralField rho_hat = forward_transform(rho);
  SpectralField lap_u = laplacian(sol.potential_hat);
  const double eps2 = sol.epsilon * sol.epsilon;
  KahanSum s;
  for (int64_t i = 0; i < rho.cells(); ++i) {
    std::complex<double> r = -eps2 * lap_u.coefficients[static_cast<size_t>(i)] -
                             rho_hat.coefficients[static_cast<size_t>(i)];
    if (i == 0) r += rho_hat.coefficients[0];  // background charge
    s.add(std::norm(r));
  }
  return std::sqrt(s.value());
}

namespace {

// nearest-image free-space kernel x / (2 pi |x|^2); the singular cell is a
// symmetric principal value and contributes zero
Vec free_kernel(const Vec& z) {
  const double r2 = z.norm2();
  if (r2 == 0.0) return Vec{};
  return (1.0 / (2.0 * M_PI * r2)) * z;
}

struct GreenTables {
  GriddedField kernel_samples;     // free kernel at cell displacements
  SpectralField correction_hat;    // banded smooth correction
};

const GreenTables& green_tables(const TorusGrid& g) {
  static std::mutex mu;
  static std::map<int, GreenTables> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(g.cells);
  if (it != cache.end()) return it->second;

  GreenTables t;
  t.kernel_samples = GriddedField(g, 2);
  for (int64_t i = 0; i < g.total_cells(); ++i) {
    Vec z = torus_displacement(cell_center(i, g), Vec{}, 2);
    Vec k = free_kernel(z);
    t.kernel_samples.at(0, i) = k[0];
    t.kernel_samples.at(1, i) = k[1];
  }

  // exact unit-source field kernel minus the sampled free kernel, kept on a
  // band of at most 64 modes per axis
  SpectralField free_hat = forward_transform(t.kernel_samples);
  t.correction_hat = SpectralField(g, 2);
  const int band = std::min(32, g.cells / 2 - 1);
  for (int64_t i = 0; i < g.total_cells(); ++i) {
    int bins[3];
    decode_index(i, g, bins);
    const int k0 = signed_mode(bins[0], g.cells);
    const int k1 = signed_mode(bins[1], g.cells);
    if (std::abs(k0) > band || std::abs(k1) > band) continue;
    const double k2 = static_cast<double>(k0) * k0 + static_cast<double>(k1) * k1;
    std::complex<double> exact0 = 0.0, exact1 = 0.0;
    if (k2 != 0.0) {
      // E = -grad U with Uhat = rhohat / (2 pi |k|)^2
      exact0 = std::complex<double>(0.0, -k0 / (2.0 * M_PI * k2));
      exact1 = std::complex<double>(0.0, -k1 / (2.0 * M_PI * k2));
    }
    // midpoint convolution with the samples carries multiplier N vol Khat = Khat
    t.correction_hat.component(0)[i] = exact0 - free_hat.component(0)[i];
    t.correction_hat.component(1)[i] = exact1 - free_hat.component(1)[i];
  }
  return cache.emplace(g.cells, std::move(t)).first->second;
}

}  // namespace

GriddedField green_field_2d(const GriddedField& rho, double epsilon) {
  if (rho.grid.dim != 2) throw std::invalid_argument("green_field_2d: grid must be 2D");
  if (rho.components != 1) throw std::invalid_argument("green_field_2d: rho must be scalar");
  if (!(epsilon > 0.0)) throw std::invalid_argument("green_field_2d: epsilon must be > 0");

  const TorusGrid& g = rho.grid;
  const GreenTables& tables = green_tables(g);
  const int64_t n = g.total_cells();
  const double vol = g.cell_volume();
  const double mean = rho.mean();

  // midpoint-rule convolution with the singular part
  GriddedField out(g, 2);
  const int nc = g.cells;
  for (int64_t i = 0; i < n; ++i) {
    int bi[3];
    decode_index(i, g, bi);
    KahanSum s0, s1;
    for (int64_t j = 0; j < n; ++j) {
      int bj[3];
      decode_index(j, g, bj);
      const int off[3] = {(bi[0] - bj[0] + nc) % nc, (bi[1] - bj[1] + nc) % nc, 0};
      const int64_t oidx = encode_index(off, g);
      const double q = (rho.values[static_cast<size_t>(j)] - mean) * vol;
      s0.add(tables.kernel_samples.at(0, oidx) * q);
      s1.add(tables.kernel_samples.at(1, oidx) * q);
    }
    out.at(0, i) = s0.value();
    out.at(1, i) = s1.value();
  }

  // banded smooth correction applied mode-wise
  SpectralField rho_hat = forward_transform(rho);
  SpectralField corr(g, 2);
  for (int64_t i = 0; i < n; ++i) {
    corr.component(0)[i] = tables.correction_hat.component(0)[i] * rho_hat.coefficients[static_cast<size_t>(i)];
    corr.component(1)[i] = tables.correction_hat.component(1)[i] * rho_hat.coefficients[static_cast<size_t>(i)];
  }
  corr.component(0)[0] = 0.0;
  corr.component(1)[0] = 0.0;
  GriddedField corr_real = inverse_transform_real(corr, 1e-6);

  const double inv_eps2 = 1.0 / (epsilon * epsilon);
  for (size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = (out.values[i] + corr_real.values[i]) * inv_eps2;
  return out;
}

}  // namespace quasipic
