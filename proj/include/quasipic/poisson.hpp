#pragma once

#include "quasipic/field.hpp"

namespace quasipic {

// Solution of -eps^2 Lap U = rho - <rho> on the torus with <U> = 0.
struct PoissonSolution {
  GriddedField potential;     // zero-mean scalar U
  GriddedField field;         // E = -grad U
  SpectralField potential_hat;
  double epsilon = 1.0;
  double field_energy = 0.0;  // (eps^2 / 2) int |grad U|^2
};

// Spectral solve: Uhat(k) = rhohat(k) / (eps^2 (2 pi |k|)^2) for k != 0.
// The k = 0 bin of the source is dropped, which is exactly the neutralizing
// background subtraction.
PoissonSolution solve_potential(const GriddedField& rho, double epsilon);

// L2 norm of -eps^2 Lap U - (rho - <rho>), evaluated spectrally
double residual(const GriddedField& rho, const PoissonSolution& sol);

// Independent 2D field evaluation: singular free-space kernel summed in real
// space plus a smooth periodic correction applied mode-wise. The correction
// has no closed form; it is represented by Fourier coefficients on a band of
// at most 64 modes per axis, precomputed once per grid size.
GriddedField green_field_2d(const GriddedField& rho, double epsilon);

}  // namespace quasipic
