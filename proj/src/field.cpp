#include "quasipic/field.hpp"

#include <fftw3.h>

#include <mutex>

namespace quasipic {

double GriddedField::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double GriddedField::l2_norm() const {
  KahanSum s;
  for (double v : values) s.add(v * v);
  return std::sqrt(s.value() * grid.cell_volume());
}

double GriddedField::mean(int c) const {
  KahanSum s;
  const double* p = component(c);
  for (int64_t i = 0; i < cells(); ++i) s.add(p[i]);
  return s.value() / static_cast<double>(cells());
}

namespace {

// FFTW planner is not thread safe; plans are cached per (dim, n, sign).
struct PlanCache {
  std::mutex mu;
  struct Entry {
    int dim, n, sign;
    fftw_plan plan;
  };
  std::vector<Entry> entries;

  fftw_plan get(int dim, int n, int sign, fftw_complex* buf) {
    std::lock_guard<std::mutex> lock(mu);
    for (auto& e : entries)
      if (e.dim == dim && e.n == n && e.sign == sign) return e.plan;
    int dims[3] = {n, n, n};
    // FFTW_ESTIMATE does not touch the buffer and plans deterministically
    fftw_plan p = fftw_plan_dft(dim, dims, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    entries.push_back({dim, n, sign, p});
    return p;
  }
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void run_fft(int dim, int n, int sign, std::complex<double>* data) {
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_plan p = plan_cache().get(dim, n, sign, buf);
  fftw_execute_dft(p, buf, buf);
}

}  // namespace

SpectralField forward_transform(const GriddedField& f) {
  SpectralField out(f.grid, f.components);
  const int64_t n = f.cells();
  const double scale = 1.0 / static_cast<double>(n);
  std::vector<std::complex<double>> buf(static_cast<size_t>(n));
  for (int c = 0; c < f.components; ++c) {
    const double* src = f.component(c);
    for (int64_t i = 0; i < n; ++i) buf[static_cast<size_t>(i)] = src[i];
    run_fft(f.grid.dim, f.grid.cells, FFTW_FORWARD, buf.data());
    std::complex<double>* dst = out.component(c);
    for (int64_t i = 0; i < n; ++i) dst[i] = buf[static_cast<size_t>(i)] * scale;
  }
  return out;
}

GriddedField inverse_transform(const SpectralField& fhat) {
  return inverse_transform_real(fhat, 1e99);
}

GriddedField inverse_transform_real(const SpectralField& fhat, double imag_tol) {
  GriddedField out(fhat.grid, fhat.components);
  const int64_t n = fhat.cells();
  std::vector<std::complex<double>> buf(static_cast<size_t>(n));
  double worst_imag = 0.0;
  double scale_ref = 0.0;
  for (int c = 0; c < fhat.components; ++c) {
    const std::complex<double>* src = fhat.component(c);
    for (int64_t i = 0; i < n; ++i) buf[static_cast<size_t>(i)] = src[i];
    run_fft(fhat.grid.dim, fhat.grid.cells, FFTW_BACKWARD, buf.data());
    double* dst = out.component(c);
    for (int64_t i = 0; i < n; ++i) {
      dst[i] = buf[static_cast<size_t>(i)].real();
      worst_imag = std::max(worst_imag, std::abs(buf[static_cast<size_t>(i)].imag()));
      scale_ref = std::max(scale_ref, std::abs(dst[i]));
    }
  }
  if (worst_imag > imag_tol * std::max(1.0, scale_ref))
    throw std::runtime_error("inverse transform: field is not real to tolerance");
  return out;
}

SpectralField gradient(const SpectralField& scalar) {
  if (scalar.components != 1) throw std::invalid_argument("gradient expects a scalar field");
  const TorusGrid& g = scalar.grid;
  SpectralField out(g, g.dim);
  const int nyq = g.cells / 2;
  for (int64_t i = 0; i < out.cells(); ++i) {
    int bins[3];
    decode_index(i, g, bins);
    const std::complex<double> v = scalar.coefficients[static_cast<size_t>(i)];
    for (int a = 0; a < g.dim; ++a) {
      int k = signed_mode(bins[a], g.cells);
      if (k == nyq) k = 0;  // no odd derivative at the Nyquist bin
      out.component(a)[i] = std::complex<double>(0.0, 2.0 * M_PI * k) * v;
    }
  }
  return out;
}

SpectralField divergence(const SpectralField& vec) {
  const TorusGrid& g = vec.grid;
  if (vec.components != g.dim) throw std::invalid_argument("divergence expects a vector field");
  SpectralField out(g, 1);
  const int nyq = g.cells / 2;
  for (int64_t i = 0; i < out.cells(); ++i) {
    int bins[3];
    decode_index(i, g, bins);
    std::complex<double> s = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      int k = signed_mode(bins[a], g.cells);
      if (k == nyq) k = 0;
      s += std::complex<double>(0.0, 2.0 * M_PI * k) * vec.component(a)[i];
    }
    out.coefficients[static_cast<size_t>(i)] = s;
  }
  return out;
}

SpectralField laplacian(const SpectralField& f) {
  const TorusGrid& g = f.grid;
  SpectralField out(g, f.components);
  for (int64_t i = 0; i < f.cells(); ++i) {
    int bins[3];
    decode_index(i, g, bins);
    double k2 = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      double k = signed_mode(bins[a], g.cells);
      k2 += k * k;
    }
    const double mult = -4.0 * M_PI * M_PI * k2;
    for (int c = 0; c < f.components; ++c) out.component(c)[i] = mult * f.component(c)[i];
  }
  return out;
}

void dealias_two_thirds(SpectralField& f) {
  const TorusGrid& g = f.grid;
  const int cut = g.cells / 3;
  for (int64_t i = 0; i < f.cells(); ++i) {
    int bins[3];
    decode_index(i, g, bins);
    bool kill = false;
    for (int a = 0; a < g.dim; ++a)
      if (std::abs(signed_mode(bins[a], g.cells)) > cut) kill = true;
    if (kill)
      for (int c = 0; c < f.components; ++c) f.component(c)[i] = 0.0;
  }
}

double b_delta_norm(const SpectralField& fhat, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("b_delta_norm: delta must be > 0");
  const TorusGrid& g = fhat.grid;
  KahanSum s;
  for (int64_t i = 0; i < fhat.cells(); ++i) {
    int bins[3];
    decode_index(i, g, bins);
    int l1 = 0;
    for (int a = 0; a < g.dim; ++a) l1 += std::abs(signed_mode(bins[a], g.cells));
    double mag = 0.0;
    for (int c = 0; c < fhat.components; ++c) mag += std::abs(fhat.component(c)[i]);
    if (mag != 0.0) s.add(mag * std::pow(delta, l1));
  }
  return s.value();
}

double spectral_energy(const SpectralField& fhat) {
  KahanSum s;
  for (const auto& z : fhat.coefficients) s.add(std::norm(z));
  return s.value();
}

double evaluate_mode_sum(const SpectralField& fhat, int component, const Vec& x) {
  const TorusGrid& g = fhat.grid;
  const std::complex<double>* coef = fhat.component(component);
  KahanSum re;
  for (int64_t i = 0; i < g.total_cells(); ++i) {
    const std::complex<double> z = coef[i];
    if (z == std::complex<double>(0.0, 0.0)) continue;
    int bins[3];
    decode_index(i, g, bins);
    double phase = 0.0;
    for (int a = 0; a < g.dim; ++a) phase += signed_mode(bins[a], g.cells) * x[a];
    re.add(z.real() * std::cos(2.0 * M_PI * phase) - z.imag() * std::sin(2.0 * M_PI * phase));
  }
  return re.value();
}

}  // namespace quasipic
