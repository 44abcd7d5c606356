#pragma once

#include <functional>
#include <optional>

#include "quasipic/cic.hpp"
#include "quasipic/poisson.hpp"

namespace quasipic {

struct KineticState {
  ParticleEnsemble ensemble;
  TorusGrid grid;
  QuasineutralParams params;
  double time = 0.0;
  PoissonSolution solution;  // field of the current ensemble

  void refresh_field();
};

KineticState make_kinetic_state(ParticleEnsemble ensemble, const TorusGrid& grid,
                                const QuasineutralParams& params);

struct CflViolation : std::runtime_error {
  double vmax;
  double dt;
  CflViolation(double vmax_, double dt_)
      : std::runtime_error("CFL violation: dt * vmax = " + std::to_string(dt_ * vmax_) +
                           " exceeds the grid spacing (vmax = " + std::to_string(vmax_) + ")"),
        vmax(vmax_),
        dt(dt_) {}
};

// One leapfrog step: half kick, drift with wrap, field refresh, half kick.
// An external field freezes the force (no refresh); the step is then exactly
// reversible.
void push(KineticState& state, double dt, const GriddedField* external_field = nullptr);

struct EnergyBreakdown {
  double kinetic = 0.0;
  double field = 0.0;
  double total = 0.0;
};

EnergyBreakdown energy(const KineticState& state);

struct DiagnosticsSeries {
  std::vector<double> times;
  std::vector<double> mass;
  std::vector<double> kinetic_energy;
  std::vector<double> field_energy;
  std::vector<double> total_energy;
  std::vector<double> support_radius;            // V(t)
  std::vector<double> density_sup;               // max rho
  std::vector<double> density_l2;
  std::vector<double> field_sup;                 // max |E|
  std::vector<std::optional<double>> w2_to_reference;

  size_t size() const { return times.size(); }
  void append(const KineticState& state, std::optional<double> w2_ref = std::nullopt);
  void write_csv(std::ostream& os) const;
};

struct RunHooks {
  // called at every recorded sample, after the diagnostics row is appended
  std::function<void(const KineticState&, DiagnosticsSeries&)> on_record;
};

DiagnosticsSeries run(KineticState& state, double t_end, double dt, int record_every,
                      const RunHooks& hooks = {});

}  // namespace quasipic
