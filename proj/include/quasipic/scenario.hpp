#pragma once

#include "quasipic/config.hpp"
#include "quasipic/multifluid.hpp"
#include "quasipic/sampling.hpp"

namespace quasipic {

// Scenario catalog. Initial data are trigonometric polynomials, so the
// analytic-regularity hypotheses hold at machine level.
//
//   shear      rho = 1, velocity label theta plus a divergence-free flow of
//              amplitude delta (well prepared; the default twin scenario)
//   landau     rho = 1 + delta cos(2 pi m x1), truncated gaussian velocities
//              for sampled runs, label velocity theta for fluid families
//   cold_mode  rho = 1 + delta cos(2 pi m x1), all velocities zero
//              (dispersion measurements; the limit system rejects it)

AnalyticDensity scenario_density(const ExperimentConfig& cfg);

// family of the scaled system
FluidFamily scenario_epsilon_family(const ExperimentConfig& cfg);

// family of the limit system (unit total density, divergence-free current)
FluidFamily scenario_limit_family(const ExperimentConfig& cfg);

// the divergence-free flow used by the shear scenario
GriddedField scenario_flow(const ExperimentConfig& cfg, const TorusGrid& grid);

}  // namespace quasipic
