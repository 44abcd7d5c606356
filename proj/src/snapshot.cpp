#include "quasipic/snapshot.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace quasipic {

namespace {

static_assert(sizeof(double) == 8);

template <class T>
void put_le(std::ostream& os, T v) {
  unsigned char bytes[sizeof(T)];
  uint64_t u;
  if constexpr (std::is_same_v<T, double>) {
    u = std::bit_cast<uint64_t>(v);
  } else {
    u = static_cast<uint64_t>(v);
  }
  for (size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  is.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!is) throw std::runtime_error("PSS1: truncated stream");
  uint64_t u = 0;
  for (size_t i = 0; i < sizeof(T); ++i) u |= static_cast<uint64_t>(bytes[i]) << (8 * i);
  if constexpr (std::is_same_v<T, double>) return std::bit_cast<double>(u);
  return static_cast<T>(u);
}

void put_header(std::ostream& os, int dim, uint8_t kind) {
  os.write("PSS1", 4);
  put_le<uint32_t>(os, static_cast<uint32_t>(dim));
  put_le<uint8_t>(os, kind);
}

int get_header(std::istream& is, uint8_t expected_kind) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "PSS1", 4) != 0) throw std::runtime_error("PSS1: bad magic");
  const auto dim = get_le<uint32_t>(is);
  if (dim < 1 || dim > 3) throw std::runtime_error("PSS1: bad dimension");
  const auto kind = get_le<uint8_t>(is);
  if (kind != expected_kind) throw std::runtime_error("PSS1: unexpected snapshot kind");
  return static_cast<int>(dim);
}

}  // namespace

void save_ensemble(std::ostream& os, const ParticleEnsemble& e) {
  e.check_consistent();
  put_header(os, e.dim, 0);
  put_le<uint64_t>(os, e.size());
  for (const auto& x : e.positions)
    for (int a = 0; a < e.dim; ++a) put_le<double>(os, x[a]);
  for (const auto& v : e.velocities)
    for (int a = 0; a < e.dim; ++a) put_le<double>(os, v[a]);
  for (double w : e.weights) put_le<double>(os, w);
}

ParticleEnsemble load_ensemble(std::istream& is) {
  ParticleEnsemble e;
  e.dim = get_header(is, 0);
  const auto n = get_le<uint64_t>(is);
  e.positions.resize(n);
  e.velocities.resize(n);
  e.weights.resize(n);
  for (auto& x : e.positions)
    for (int a = 0; a < e.dim; ++a) x[a] = get_le<double>(is);
  for (auto& v : e.velocities)
    for (int a = 0; a < e.dim; ++a) v[a] = get_le<double>(is);
  for (auto& w : e.weights) w = get_le<double>(is);
  return e;
}

void save_field(std::ostream& os, const GriddedField& f) {
  put_header(os, f.grid.dim, 1);
  for (int a = 0; a < f.grid.dim; ++a) put_le<uint32_t>(os, static_cast<uint32_t>(f.grid.cells));
  put_le<uint32_t>(os, static_cast<uint32_t>(f.components));
  for (double v : f.values) put_le<double>(os, v);
}

GriddedField load_field(std::istream& is) {
  const int dim = get_header(is, 1);
  int cells = -1;
  for (int a = 0; a < dim; ++a) {
    const int c = static_cast<int>(get_le<uint32_t>(is));
    if (a == 0)
      cells = c;
    else if (c != cells)
      throw std::runtime_error("PSS1: anisotropic grids are not supported");
  }
  const auto comps = static_cast<int>(get_le<uint32_t>(is));
  GriddedField f(make_grid(dim, cells), comps);
  for (auto& v : f.values) v = get_le<double>(is);
  return f;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return is;
}

}  // namespace

void save_ensemble(const std::string& path, const ParticleEnsemble& e) {
  auto os = open_out(path);
  save_ensemble(os, e);
}

void save_field(const std::string& path, const GriddedField& f) {
  auto os = open_out(path);
  save_field(os, f);
}

ParticleEnsemble load_ensemble(const std::string& path) {
  auto is = open_in(path);
  return load_ensemble(is);
}

GriddedField load_field(const std::string& path) {
  auto is = open_in(path);
  return load_field(is);
}

int snapshot_kind(const std::string& path) {
  auto is = open_in(path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "PSS1", 4) != 0) throw std::runtime_error("PSS1: bad magic");
  get_le<uint32_t>(is);
  return static_cast<int>(get_le<uint8_t>(is));
}

}  // namespace quasipic
