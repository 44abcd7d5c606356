#include "quasipic/correctors.hpp"

#include "quasipic/cic.hpp"

namespace quasipic {

namespace {

// zero-mean solve of Lap phi = s for spectral s
SpectralField inverse_laplacian(const SpectralField& s) {
  const TorusGrid& g = s.grid;
  SpectralField phi(g, 1);
  for (int64_t i = 0; i < g.total_cells(); ++i) {
    int bins[3];
    decode_index(i, g, bins);
    double k2 = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      const double k = signed_mode(bins[a], g.cells);
      k2 += k * k;
    }
    if (k2 == 0.0) continue;
    phi.coefficients[static_cast<size_t>(i)] =
        s.coefficients[static_cast<size_t>(i)] / (-4.0 * M_PI * M_PI * k2);
  }
  return phi;
}

// potential time derivative: Lap(dphi) = -div((j . grad) grad phi)
SpectralField potential_rhs(const SpectralField& phi, const GriddedField& j) {
  const TorusGrid& g = phi.grid;
  const SpectralField grad_hat = gradient(phi);
  GriddedField advected(g, g.dim);
  for (int a = 0; a < g.dim; ++a) {
    SpectralField comp(g, 1);
    std::copy_n(grad_hat.component(a), g.total_cells(), comp.component(0));
    const GriddedField hess_row = inverse_transform_real(gradient(comp));
    double* out = advected.component(a);
    for (int64_t i = 0; i < g.total_cells(); ++i) {
      double acc = 0.0;
      for (int b = 0; b < g.dim; ++b) acc += j.component(b)[i] * hess_row.component(b)[i];
      out[i] = acc;
    }
  }
  SpectralField adv_hat = forward_transform(advected);
  dealias_two_thirds(adv_hat);
  SpectralField s = divergence(adv_hat);
  for (auto& z : s.coefficients) z = -z;
  return inverse_laplacian(s);
}

void axpy(SpectralField& y, double a, const SpectralField& x) {
  for (size_t i = 0; i < y.coefficients.size(); ++i) y.coefficients[i] += a * x.coefficients[i];
}

void rk4_potential(SpectralField& phi, const GriddedField& j, double dt) {
  const SpectralField k1 = potential_rhs(phi, j);
  SpectralField y = phi;
  axpy(y, 0.5 * dt, k1);
  const SpectralField k2 = potential_rhs(y, j);
  y = phi;
  axpy(y, 0.5 * dt, k2);
  const SpectralField k3 = potential_rhs(y, j);
  y = phi;
  axpy(y, dt, k3);
  const SpectralField k4 = potential_rhs(y, j);
  axpy(phi, dt / 6.0, k1);
  axpy(phi, dt / 3.0, k2);
  axpy(phi, dt / 3.0, k3);
  axpy(phi, dt / 6.0, k4);
  phi.coefficients[0] = 0.0;  // mean mode pinned
}

}  // namespace

CorrectorState corrector_initial(const GriddedField& e0, const GriddedField& j0, double epsilon,
                                 OscillationFrequency frequency) {
  if (e0.grid != j0.grid) throw std::invalid_argument("corrector_initial: grid mismatch");
  if (e0.components != e0.grid.dim || j0.components != j0.grid.dim)
    throw std::invalid_argument("corrector_initial: expected vector fields");
  if (!(epsilon > 0.0)) throw std::invalid_argument("corrector_initial: epsilon must be > 0");

  const double half_sqrt_eps = 0.5 * std::sqrt(epsilon);
  SpectralField div_e = divergence(forward_transform(e0));
  SpectralField div_j = divergence(forward_transform(j0));
  for (auto& z : div_e.coefficients) z *= half_sqrt_eps;
  for (auto& z : div_j.coefficients) z *= 0.5;

  CorrectorState st;
  st.epsilon = epsilon;
  st.frequency = frequency;
  st.phi_re = inverse_laplacian(div_e);
  st.phi_im = inverse_laplacian(div_j);
  return st;
}

void advance_correctors(CorrectorState& state, const GriddedField& j, double dt) {
  if (j.components != j.grid.dim) throw std::invalid_argument("advance_correctors: j must be a vector field");
  if (j.grid != state.phi_re.grid) throw std::invalid_argument("advance_correctors: grid mismatch");
  rk4_potential(state.phi_re, j, dt);
  rk4_potential(state.phi_im, j, dt);
  state.time += dt;
}

GriddedField oscillation_shift(const CorrectorState& state, double t) {
  const double w = state.omega();
  const double s = -2.0 * std::sin(w * t);
  const double c = -2.0 * std::cos(w * t);
  const GriddedField grad_re = inverse_transform_real(gradient(state.phi_re));
  const GriddedField grad_im = inverse_transform_real(gradient(state.phi_im));
  GriddedField shift(state.phi_re.grid, state.phi_re.grid.dim);
  for (size_t i = 0; i < shift.values.size(); ++i)
    shift.values[i] = s * grad_re.values[i] + c * grad_im.values[i];
  return shift;
}

ParticleEnsemble filter_ensemble(const ParticleEnsemble& e, const CorrectorState& state, double t) {
  const GriddedField shift = oscillation_shift(state, t);
  ParticleEnsemble out = e;
  for (size_t i = 0; i < out.size(); ++i) out.velocities[i] += interpolate(shift, out.positions[i]);
  return out;
}

double divergence_l2(const CorrectorState& state) {
  const TorusGrid& g = state.phi_re.grid;
  KahanSum s;
  for (int64_t i = 0; i < g.total_cells(); ++i) {
    int bins[3];
    decode_index(i, g, bins);
    double k2 = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      const double k = signed_mode(bins[a], g.cells);
      k2 += k * k;
    }
    const double lap = 4.0 * M_PI * M_PI * k2;
    s.add(lap * lap *
          (std::norm(state.phi_re.coefficients[static_cast<size_t>(i)]) +
           std::norm(state.phi_im.coefficients[static_cast<size_t>(i)])));
  }
  return std::sqrt(s.value());
}

namespace {

double gradient_tensor_sup(const std::vector<const GriddedField*>& vector_fields) {
  const TorusGrid& g = vector_fields.front()->grid;
  std::vector<GriddedField> rows;
  for (const GriddedField* f : vector_fields) {
    SpectralField f_hat = forward_transform(*f);
    for (int c = 0; c < g.dim; ++c) {
      SpectralField comp(g, 1);
      std::copy_n(f_hat.component(c), g.total_cells(), comp.component(0));
      rows.push_back(inverse_transform_real(gradient(comp)));
    }
  }
  double sup = 0.0;
  for (int64_t i = 0; i < g.total_cells(); ++i) {
    double frob2 = 0.0;
    for (const auto& r : rows)
      for (int a = 0; a < g.dim; ++a) frob2 += r.component(a)[i] * r.component(a)[i];
    sup = std::max(sup, frob2);
  }
  return std::sqrt(sup);
}

}  // namespace

double shift_lipschitz(const CorrectorState& state, double t) {
  const GriddedField shift = oscillation_shift(state, t);
  return gradient_tensor_sup({&shift});
}

double corrector_gradient_sup(const CorrectorState& state) {
  const GriddedField grad_re = inverse_transform_real(gradient(state.phi_re));
  const GriddedField grad_im = inverse_transform_real(gradient(state.phi_im));
  return gradient_tensor_sup({&grad_re, &grad_im});
}

}  // namespace quasipic
