#pragma once

#include "quasipic/cic.hpp"
#include "quasipic/poisson.hpp"

namespace quasipic {

// theta-indexed family of monokinetic fluids (rho^theta, v^theta) under a
// fixed quadrature of the velocity-label measure mu(dtheta).
struct FluidFamily {
  TorusGrid grid;
  bool limit_mode = false;   // true: incompressible limit system
  double epsilon = 1.0;      // used when limit_mode is false
  double c_d = 0.0;          // normalizing constant of mu
  double time = 0.0;
  std::vector<Vec> theta_nodes;
  std::vector<double> theta_weights;   // nonnegative, sum 1
  std::vector<GriddedField> rho;       // scalar per node
  std::vector<GriddedField> vel;       // vector per node

  size_t nodes() const { return theta_nodes.size(); }
  void check_consistent() const;
};

// c_d with int c_d dtheta / (1 + |theta|^{d+1}) = 1 over R^d
double normalizing_constant(int dim, double rel_tol = 1e-10);

struct ThetaQuadrature {
  std::vector<Vec> nodes;
  std::vector<double> weights;  // renormalized to sum 1
  double discarded_mass = 0.0;  // mu mass outside the cutoff box
};

// tensor Gauss-Legendre nodes on [-cutoff, cutoff]^d against the density of
// mu; rejects cutoffs whose tail mass exceeds 1e-4
ThetaQuadrature discretize_mu(int dim, int nodes_per_axis, double cutoff);

// sum_theta w_theta rho^theta
GriddedField total_density(const FluidFamily& f);
// mean current j = sum_theta w_theta rho^theta v^theta
GriddedField mean_current(const FluidFamily& f);
// field of the family: scaled Poisson solve in epsilon mode, pressure
// gradient enforcing d/dt div j = 0 in limit mode
GriddedField family_field(const FluidFamily& f);

struct FluidEnergy {
  double kinetic = 0.0;
  double field = 0.0;
  double total = 0.0;
};
FluidEnergy family_energy(const FluidFamily& f);

// one explicit RK4 step of the pressureless Euler system with self-
// consistent scaled Poisson field; spectral derivatives, 2/3-rule dealiased
void multifluid_step(FluidFamily& f, double dt);

// same transport with the Lagrange-multiplier field; the unit-density
// constraint is checked before and re-projected after the step
void limit_step(FluidFamily& f, double dt);

// checks required of limit-mode initial data
void check_limit_initial_data(const FluidFamily& f, double tol = 1e-8);

// equal-lattice particle realization: per cell, per sub-point, per theta
// node one particle of weight w_theta rho^theta(x) vol / ppc at velocity
// v^theta(x); ppc must be a d-th power so the sub-lattice is regular
ParticleEnsemble superpose(const FluidFamily& f, int particles_per_cell);

// Lagrangian view of the family: the superposition fixed at construction
// time, advected passively through the per-theta velocity fields. Weights
// never change, which keeps the tracer cloud a representation of the same
// evolving measure.
struct FluidTracers {
  ParticleEnsemble ensemble;
  std::vector<int> theta_index;
};

FluidTracers make_tracers(const FluidFamily& f, int particles_per_cell);

// Heun update of tracer positions from the velocity fields before and after
// a fluid step; tracer velocities are re-evaluated from the post-step fields
void advect_tracers(FluidTracers& tracers, const FluidFamily& before, const FluidFamily& after,
                    double dt);

}  // namespace quasipic
