#pragma once

#include "quasipic/poisson.hpp"

namespace quasipic {

enum class OscillationFrequency {
  InverseEpsilon,      // 1 / eps, the linearized plasma frequency under this scaling
  InverseSqrtEpsilon,  // 1 / sqrt(eps)
};

inline double oscillation_omega(OscillationFrequency f, double epsilon) {
  return f == OscillationFrequency::InverseEpsilon ? 1.0 / epsilon : 1.0 / std::sqrt(epsilon);
}

// Oscillation corrector d+ (d- is its conjugate), stored through complex
// scalar potentials: d+ = grad(phi_re + i phi_im), so curl d+ = 0 holds by
// construction. The velocity shift is
//   C(t,x) = -2 Im(d+ e^{i w t}) = -2 (sin(wt) grad phi_re + cos(wt) grad phi_im).
struct CorrectorState {
  SpectralField phi_re;  // Hermitian-symmetric scalar coefficients, zero mean
  SpectralField phi_im;
  double epsilon = 1.0;
  double time = 0.0;
  OscillationFrequency frequency = OscillationFrequency::InverseEpsilon;

  double omega() const { return oscillation_omega(frequency, epsilon); }
};

// initial potentials from div d+(0) = div(sqrt(eps) E0 + i j0) / 2, zero mean
CorrectorState corrector_initial(const GriddedField& e0, const GriddedField& j0, double epsilon,
                                 OscillationFrequency frequency = OscillationFrequency::InverseEpsilon);

// one RK4 step of div(dt d+ + (j . grad) d+) = 0 with curl d+ = 0 kept exact;
// j is frozen over the step
void advance_correctors(CorrectorState& state, const GriddedField& j, double dt);

// real shift field C(t, x) on the grid
GriddedField oscillation_shift(const CorrectorState& state, double t);

// velocities shifted by +C(t, x) interpolated at particle positions
ParticleEnsemble filter_ensemble(const ParticleEnsemble& e, const CorrectorState& state, double t);

// L2 norm of div d+ = Lap(phi_re + i phi_im)
double divergence_l2(const CorrectorState& state);

inline bool is_well_prepared(const CorrectorState& state, double tol) {
  return divergence_l2(state) <= tol;
}

// sup over cells of the Frobenius norm of D_x C(t, .); dominates the
// Lipschitz constant of the shift
double shift_lipschitz(const CorrectorState& state, double t);

// same bound for d+ itself: sup Frobenius norm of D_x d+
double corrector_gradient_sup(const CorrectorState& state);

}  // namespace quasipic
