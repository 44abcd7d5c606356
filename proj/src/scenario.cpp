#include "quasipic/scenario.hpp"

namespace quasipic {

namespace {

void check_name(const std::string& name) {
  if (name != "shear" && name != "landau" && name != "cold_mode")
    throw std::invalid_argument("unknown scenario: " + name);
}

GriddedField cosine_density(const ExperimentConfig& cfg, const TorusGrid& grid) {
  GriddedField rho(grid, 1);
  for (int64_t i = 0; i < rho.cells(); ++i) {
    const Vec x = cell_center(i, grid);
    rho.values[static_cast<size_t>(i)] =
        1.0 + cfg.scenario_delta * std::cos(2.0 * M_PI * cfg.scenario_mode * x[0]);
  }
  return rho;
}

FluidFamily base_family(const ExperimentConfig& cfg, bool limit_mode) {
  const TorusGrid grid = make_grid(cfg.dim, cfg.cells);
  FluidFamily f;
  f.grid = grid;
  f.limit_mode = limit_mode;
  f.epsilon = cfg.params.epsilon;
  f.c_d = normalizing_constant(cfg.dim);
  if (cfg.theta_nodes == 1) {
    f.theta_nodes = {Vec{}};
    f.theta_weights = {1.0};
  } else {
    ThetaQuadrature q = discretize_mu(cfg.dim, cfg.theta_nodes, cfg.theta_cutoff);
    f.theta_nodes = std::move(q.nodes);
    f.theta_weights = std::move(q.weights);
  }
  return f;
}

}  // namespace

GriddedField scenario_flow(const ExperimentConfig& cfg, const TorusGrid& grid) {
  GriddedField flow(grid, grid.dim);
  const double m = 2.0 * M_PI * cfg.scenario_mode;
  for (int64_t i = 0; i < grid.total_cells(); ++i) {
    const Vec x = cell_center(i, grid);
    if (grid.dim == 1) {
      flow.component(0)[i] = cfg.scenario_delta * std::sin(m * x[0]);  // 1D has no shear; kept for completeness
    } else {
      flow.component(0)[i] = cfg.scenario_delta * std::sin(m * x[1]);
      flow.component(1)[i] = cfg.scenario_delta * std::sin(m * x[0]);
      if (grid.dim == 3) flow.component(2)[i] = cfg.scenario_delta * std::sin(m * x[0]);
    }
  }
  return flow;
}

AnalyticDensity scenario_density(const ExperimentConfig& cfg) {
  check_name(cfg.scenario);
  AnalyticDensity d;
  d.dim = cfg.dim;
  if (cfg.scenario_delta != 0.0 && cfg.scenario != "shear")
    d.modes.push_back({{cfg.scenario_mode, 0, 0}, cfg.scenario_delta, 0.0});
  if (cfg.scenario == "landau") {
    d.velocity.kind = VelocityProfile::Kind::TruncatedGaussian;
    d.velocity.vth = cfg.scenario_vth;
    d.velocity.radius = cfg.scenario_vmax;
  } else {
    d.velocity.kind = VelocityProfile::Kind::Dirac;  // shear / cold_mode
  }
  return d;
}

FluidFamily scenario_epsilon_family(const ExperimentConfig& cfg) {
  check_name(cfg.scenario);
  FluidFamily f = base_family(cfg, false);
  const TorusGrid& g = f.grid;
  const GriddedField flow =
      cfg.scenario == "shear" ? scenario_flow(cfg, g) : GriddedField(g, g.dim);
  for (size_t t = 0; t < f.nodes(); ++t) {
    GriddedField rho = cfg.scenario == "shear" ? [&] {
      GriddedField r(g, 1);
      std::fill(r.values.begin(), r.values.end(), 1.0);
      return r;
    }()
                                               : cosine_density(cfg, g);
    GriddedField vel = flow;
    for (int c = 0; c < g.dim; ++c) {
      double* v = vel.component(c);
      const double theta_c = f.theta_nodes[t][c];
      for (int64_t i = 0; i < g.total_cells(); ++i) v[i] += theta_c;
    }
    f.rho.push_back(std::move(rho));
    f.vel.push_back(std::move(vel));
  }
  f.check_consistent();
  return f;
}

FluidFamily scenario_limit_family(const ExperimentConfig& cfg) {
  check_name(cfg.scenario);
  if (cfg.scenario == "cold_mode")
    throw std::invalid_argument("cold_mode initial data violate the limit-system constraint");
  FluidFamily f = base_family(cfg, true);
  const TorusGrid& g = f.grid;
  const GriddedField flow =
      cfg.scenario == "shear" ? scenario_flow(cfg, g) : GriddedField(g, g.dim);
  for (size_t t = 0; t < f.nodes(); ++t) {
    GriddedField rho(g, 1);
    std::fill(rho.values.begin(), rho.values.end(), 1.0);
    GriddedField vel = flow;
    for (int c = 0; c < g.dim; ++c) {
      double* v = vel.component(c);
      const double theta_c = f.theta_nodes[t][c];
      for (int64_t i = 0; i < g.total_cells(); ++i) v[i] += theta_c;
    }
    f.rho.push_back(std::move(rho));
    f.vel.push_back(std::move(vel));
  }
  f.check_consistent();
  check_limit_initial_data(f);
  return f;
}

}  // namespace quasipic
