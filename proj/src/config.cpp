#include "quasipic/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace quasipic {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct RawConfig {
  std::map<std::string, std::string> entries;  // "section.key" -> value
  mutable std::vector<std::string> missing;

  bool has(const std::string& key) const { return entries.count(key) > 0; }

  std::string take(std::map<std::string, std::string>& pending, const std::string& key,
                   const std::string& fallback, bool required) const {
    auto it = pending.find(key);
    if (it == pending.end()) {
      if (required) missing.push_back(key);
      return fallback;
    }
    std::string v = it->second;
    pending.erase(it);
    return v;
  }
};

RawConfig parse_raw(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (raw.entries.count(full)) throw std::invalid_argument("config: duplicate key " + full);
    raw.entries[full] = value;
  }
  return raw;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw std::invalid_argument("config: key " + key + " expects a number, got '" + v + "'");
  }
}

int64_t to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw std::invalid_argument("config: key " + key + " expects an integer, got '" + v + "'");
  }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  RawConfig raw = parse_raw(text);
  std::map<std::string, std::string> pending = raw.entries;
  ExperimentConfig c;

  auto num = [&](const std::string& key, double fallback, bool required = false) {
    const std::string v = raw.take(pending, key, "", required);
    return v.empty() ? fallback : to_double(key, v);
  };
  auto integer = [&](const std::string& key, int64_t fallback, bool required = false) {
    const std::string v = raw.take(pending, key, "", required);
    return v.empty() ? fallback : to_int(key, v);
  };
  auto text_of = [&](const std::string& key, const std::string& fallback) {
    return raw.take(pending, key, fallback, false);
  };

  c.params.epsilon = num("params.epsilon", 0.0, true);
  c.params.gamma = num("params.gamma", c.params.gamma);
  c.params.alpha = num("params.alpha", c.params.alpha);
  c.params.beta = num("params.beta", c.params.beta);
  c.params.cap_k = num("params.cap_k", c.params.cap_k);
  c.params.c0 = num("params.c0", c.params.c0);
  c.params.c_alpha = num("params.c_alpha", c.params.c_alpha);
  c.params.final_time = num("params.final_time", c.params.final_time);

  c.dim = static_cast<int>(integer("grid.dim", 0, true));
  c.cells = static_cast<int>(integer("grid.cells", 0, true));

  c.particle_count = integer("particles.count", c.particle_count);
  c.particles_per_cell = static_cast<int>(integer("particles.per_cell", c.particles_per_cell));

  c.dt = num("time.dt", c.dt);
  c.record_every = static_cast<int>(integer("time.record_every", c.record_every));

  c.scenario = text_of("scenario.name", c.scenario);
  c.scenario_delta = num("scenario.delta", c.scenario_delta);
  c.scenario_mode = static_cast<int>(integer("scenario.mode", c.scenario_mode));
  c.scenario_vth = num("scenario.vth", c.scenario_vth);
  c.scenario_vmax = num("scenario.vmax", c.scenario_vmax);

  c.perturbation_kind = text_of("perturbation.kind", c.perturbation_kind);
  c.perturbation_magnitude = num("perturbation.magnitude", c.perturbation_magnitude);
  c.perturbation_fraction = num("perturbation.fraction", c.perturbation_fraction);
  c.perturbation_mode = static_cast<int>(integer("perturbation.mode", c.perturbation_mode));

  c.theta_nodes = static_cast<int>(integer("theta.nodes", c.theta_nodes));
  c.theta_cutoff = num("theta.cutoff", c.theta_cutoff);

  const std::string freq = text_of("correctors.frequency", "inv_eps");
  if (freq == "inv_eps")
    c.corrector_frequency = OscillationFrequency::InverseEpsilon;
  else if (freq == "inv_sqrt_eps")
    c.corrector_frequency = OscillationFrequency::InverseSqrtEpsilon;
  else
    throw std::invalid_argument("config: correctors.frequency must be inv_eps or inv_sqrt_eps");

  c.transport_sample_points = integer("transport.sample_points", c.transport_sample_points);
  c.transport_cap = integer("transport.cap", c.transport_cap);

  c.output_dir = text_of("output.dir", c.output_dir);
  c.seed = static_cast<uint64_t>(integer("output.seed", static_cast<int64_t>(c.seed)));

  if (!raw.missing.empty()) {
    std::string msg = "config: missing required keys:";
    for (const auto& k : raw.missing) msg += " " + k;
    throw std::invalid_argument(msg);
  }
  if (!pending.empty()) {
    std::string msg = "config: unknown keys:";
    for (const auto& [k, v] : pending) msg += " " + k;
    throw std::invalid_argument(msg);
  }
  c.validate();
  return c;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void ExperimentConfig::validate() const {
  params.validate();
  make_grid(dim, cells);  // rejects bad dim / cell counts
  if (particle_count <= 0) throw std::invalid_argument("config: particles.count must be positive");
  if (particles_per_cell < 1) throw std::invalid_argument("config: particles.per_cell must be >= 1");
  if (record_every < 1) throw std::invalid_argument("config: time.record_every must be >= 1");
  if (dt < 0.0) throw std::invalid_argument("config: time.dt must be nonnegative");
  if (perturbation_magnitude < 0.0) throw std::invalid_argument("config: perturbation.magnitude must be >= 0");
  if (!(perturbation_fraction > 0.0 && perturbation_fraction <= 1.0))
    throw std::invalid_argument("config: perturbation.fraction must be in (0,1]");
  if (perturbation_kind != "none" && perturbation_kind != "velocity_field" &&
      perturbation_kind != "high_freq")
    throw std::invalid_argument("config: perturbation.kind must be none, velocity_field or high_freq");
  if (theta_nodes < 1) throw std::invalid_argument("config: theta.nodes must be >= 1");
  if (!(theta_cutoff > 0.0)) throw std::invalid_argument("config: theta.cutoff must be positive");
  if (transport_sample_points < 8) throw std::invalid_argument("config: transport.sample_points must be >= 8");
  if (transport_cap < 16) throw std::invalid_argument("config: transport.cap must be >= 16");
}

std::string ExperimentConfig::resolved_text() const {
  std::ostringstream os;
  char buf[64];
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << key << " = " << buf << "\n";
  };
  os << "[params]\n";
  put("epsilon", params.epsilon);
  put("gamma", params.gamma);
  put("alpha", params.alpha);
  put("beta", params.beta);
  put("cap_k", params.cap_k);
  put("c0", params.c0);
  put("c_alpha", params.c_alpha);
  put("final_time", params.final_time);
  os << "\n[grid]\n";
  os << "dim = " << dim << "\ncells = " << cells << "\n";
  os << "\n[particles]\n";
  os << "count = " << particle_count << "\nper_cell = " << particles_per_cell << "\n";
  os << "\n[time]\n";
  put("dt", dt);
  os << "record_every = " << record_every << "\n";
  os << "\n[scenario]\n";
  os << "name = " << scenario << "\n";
  put("delta", scenario_delta);
  os << "mode = " << scenario_mode << "\n";
  put("vth", scenario_vth);
  put("vmax", scenario_vmax);
  os << "\n[perturbation]\n";
  os << "kind = " << perturbation_kind << "\n";
  put("magnitude", perturbation_magnitude);
  put("fraction", perturbation_fraction);
  os << "mode = " << perturbation_mode << "\n";
  os << "\n[theta]\n";
  os << "nodes = " << theta_nodes << "\n";
  put("cutoff", theta_cutoff);
  os << "\n[correctors]\n";
  os << "frequency = "
     << (corrector_frequency == OscillationFrequency::InverseEpsilon ? "inv_eps" : "inv_sqrt_eps")
     << "\n";
  os << "\n[transport]\n";
  os << "sample_points = " << transport_sample_points << "\ncap = " << transport_cap << "\n";
  os << "\n[output]\n";
  os << "dir = " << output_dir << "\nseed = " << seed << "\n";
  return os.str();
}

uint64_t ExperimentConfig::hash() const {
  const std::string t = resolved_text();
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : t) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace quasipic
