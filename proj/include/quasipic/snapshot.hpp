#pragma once

#include <iosfwd>
#include <string>

#include "quasipic/field.hpp"

namespace quasipic {

// PSS1 container: magic "PSS1", little-endian u32 dim, u8 kind
// (0 = ensemble, 1 = gridded field), then the payload.
//   ensemble: u64 n, n*d f64 positions, n*d f64 velocities, n f64 weights
//             (particle-major, axis fastest)
//   field:    d u32 per-axis cells, u32 components, f64 values
//             (component-major, cells row-major, last axis fastest)
// Complex fields are stored as 2k-component real fields with interleaved
// real/imaginary component pairs.

void save_ensemble(std::ostream& os, const ParticleEnsemble& e);
void save_field(std::ostream& os, const GriddedField& f);
ParticleEnsemble load_ensemble(std::istream& is);
GriddedField load_field(std::istream& is);

void save_ensemble(const std::string& path, const ParticleEnsemble& e);
void save_field(const std::string& path, const GriddedField& f);
ParticleEnsemble load_ensemble(const std::string& path);
GriddedField load_field(const std::string& path);

// peeks at the header byte; 0 = ensemble, 1 = field
int snapshot_kind(const std::string& path);

}  // namespace quasipic
