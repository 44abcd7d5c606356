#pragma once

#include <cstdint>
#include <string>

#include "quasipic/common.hpp"
#include "quasipic/correctors.hpp"

namespace quasipic {

// Resolved experiment configuration. Text format: bracketed sections with
// `key = value` lines and `#` comments. Unknown keys are rejected, missing
// required keys are reported all at once, and re-parsing the resolved dump
// reproduces the configuration exactly.
struct ExperimentConfig {
  QuasineutralParams params;

  int dim = 2;
  int cells = 64;

  int64_t particle_count = 100000;  // plain kinetic runs
  int particles_per_cell = 4;       // twin-run superposition lattice

  double dt = 0.0;  // 0 = choose from the CFL and oscillation limits
  int record_every = 10;

  std::string scenario = "shear";
  double scenario_delta = 0.1;
  int scenario_mode = 1;
  double scenario_vth = 1.0;
  double scenario_vmax = 4.0;

  std::string perturbation_kind = "velocity_field";  // none | velocity_field | high_freq
  double perturbation_magnitude = 0.0;               // target W2 of the perturbation
  double perturbation_fraction = 0.5;
  int perturbation_mode = 3;

  int theta_nodes = 1;      // per axis; 1 = monokinetic family at theta 0
  double theta_cutoff = 6.0;

  OscillationFrequency corrector_frequency = OscillationFrequency::InverseEpsilon;

  int64_t transport_sample_points = 512;
  int64_t transport_cap = 4096;

  std::string output_dir = "out";
  uint64_t seed = 1;

  void validate() const;
  std::string resolved_text() const;
  uint64_t hash() const;  // FNV-1a of the resolved text
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::string& path);

}  // namespace quasipic
