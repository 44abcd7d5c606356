#include "quasipic/vlasov.hpp"

#include <atomic>
#include <ostream>
#include <thread>

#include "quasipic/transport.hpp"

namespace quasipic {

namespace {

// fixed partition: 64 blocks regardless of worker count, partials combined
// in block order, so serial and threaded deposits agree bitwise
constexpr int kDepositBlocks = 64;

template <class F>
void over_blocks(int64_t n, F&& fn) {
  const int64_t chunk = (n + kDepositBlocks - 1) / kDepositBlocks;
  std::vector<std::thread> pool;
  const int nt = std::min(global_threads(), kDepositBlocks);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int b = next.fetch_add(1);
      if (b >= kDepositBlocks) return;
      const int64_t lo = b * chunk, hi = std::min(n, lo + chunk);
      if (lo < hi) fn(b, lo, hi);
    }
  };
  if (nt <= 1) {
    worker();
  } else {
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
}

}  // namespace

GriddedField deposit(const ParticleEnsemble& e, const TorusGrid& grid) {
  if (e.dim != grid.dim) throw std::invalid_argument("deposit: dimension mismatch");
  const int64_t n = static_cast<int64_t>(e.size());
  const double inv_vol = 1.0 / grid.cell_volume();

  std::vector<std::vector<double>> partial(kDepositBlocks);
  over_blocks(n, [&](int b, int64_t lo, int64_t hi) {
    auto& local = partial[static_cast<size_t>(b)];
    local.assign(static_cast<size_t>(grid.total_cells()), 0.0);
    for (int64_t i = lo; i < hi; ++i) {
      const CicStencil st = cic_stencil(e.positions[static_cast<size_t>(i)], grid);
      const double q = e.weights[static_cast<size_t>(i)] * inv_vol;
      for (int c = 0; c < st.corners; ++c) local[static_cast<size_t>(st.index[c])] += q * st.weight[c];
    }
  });

  GriddedField rho(grid, 1);
  for (int b = 0; b < kDepositBlocks; ++b) {
    const auto& local = partial[static_cast<size_t>(b)];
    if (local.empty()) continue;
    for (size_t i = 0; i < rho.values.size(); ++i) rho.values[i] += local[i];
  }
  return rho;
}

void KineticState::refresh_field() {
  solution = solve_potential(deposit(ensemble, grid), params.epsilon);
}

KineticState make_kinetic_state(ParticleEnsemble ensemble, const TorusGrid& grid,
                                const QuasineutralParams& params) {
  params.validate();
  ensemble.check_consistent();
  ensemble.wrap_positions();
  KineticState s{std::move(ensemble), grid, params, 0.0, {}};
  s.refresh_field();
  return s;
}

namespace {

void kick(ParticleEnsemble& e, const GriddedField& field, double half_dt) {
  const int64_t n = static_cast<int64_t>(e.size());
  over_blocks(n, [&](int, int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i)
      e.velocities[static_cast<size_t>(i)] += half_dt * interpolate(field, e.positions[static_cast<size_t>(i)]);
  });
}

void drift(ParticleEnsemble& e, double dt, int dim) {
  const int64_t n = static_cast<int64_t>(e.size());
  over_blocks(n, [&](int, int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      Vec& x = e.positions[static_cast<size_t>(i)];
      x += dt * e.velocities[static_cast<size_t>(i)];
      x = wrap01(x, dim);
    }
  });
}

}  // namespace

void push(KineticState& state, double dt, const GriddedField* external_field) {
  if (dt == 0.0) throw std::invalid_argument("push: dt must be nonzero");
  const double vmax = support_radius(state.ensemble);
  if (std::abs(dt) * vmax > state.grid.spacing * (1.0 + 1e-12)) throw CflViolation(vmax, std::abs(dt));

  const GriddedField& field0 = external_field ? *external_field : state.solution.field;
  kick(state.ensemble, field0, 0.5 * dt);
  drift(state.ensemble, dt, state.grid.dim);
  if (!external_field) state.refresh_field();
  const GriddedField& field1 = external_field ? *external_field : state.solution.field;
  kick(state.ensemble, field1, 0.5 * dt);
  state.time += dt;
}

EnergyBreakdown energy(const KineticState& state) {
  const int64_t n = static_cast<int64_t>(state.ensemble.size());
  std::vector<double> block_sum(kDepositBlocks, 0.0);
  over_blocks(n, [&](int b, int64_t lo, int64_t hi) {
    KahanSum s;
    for (int64_t i = lo; i < hi; ++i)
      s.add(state.ensemble.weights[static_cast<size_t>(i)] *
            state.ensemble.velocities[static_cast<size_t>(i)].norm2());
    block_sum[static_cast<size_t>(b)] = s.value();
  });
  KahanSum kin;
  for (double s : block_sum) kin.add(s);
  EnergyBreakdown e;
  e.kinetic = 0.5 * kin.value();
  e.field = state.solution.field_energy;
  e.total = e.kinetic + e.field;
  return e;
}

void DiagnosticsSeries::append(const KineticState& state, std::optional<double> w2_ref) {
  const EnergyBreakdown e = energy(state);
  const GriddedField rho = deposit(state.ensemble, state.grid);
  times.push_back(state.time);
  mass.push_back(state.ensemble.total_mass());
  kinetic_energy.push_back(e.kinetic);
  field_energy.push_back(e.field);
  total_energy.push_back(e.total);
  support_radius.push_back(quasipic::support_radius(state.ensemble));
  density_sup.push_back(rho.max_abs());
  density_l2.push_back(rho.l2_norm());
  double esup = 0.0;
  for (int64_t i = 0; i < state.solution.field.cells(); ++i) {
    Vec v;
    for (int c = 0; c < state.solution.field.components; ++c) v[c] = state.solution.field.at(c, i);
    esup = std::max(esup, v.norm());
  }
  field_sup.push_back(esup);
  w2_to_reference.push_back(w2_ref);
}

void DiagnosticsSeries::write_csv(std::ostream& os) const {
  os << "t,mass,ekin,efield,etotal,vmax,rho_inf,rho_l2,w2_ref\n";
  char buf[64];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof buf, "%.17g%c", v, sep);
    os << buf;
  };
  for (size_t i = 0; i < size(); ++i) {
    put(times[i], ',');
    put(mass[i], ',');
    put(kinetic_energy[i], ',');
    put(field_energy[i], ',');
    put(total_energy[i], ',');
    put(support_radius[i], ',');
    put(density_sup[i], ',');
    put(density_l2[i], ',');
    if (w2_to_reference[i])
      put(*w2_to_reference[i], '\n');
    else
      os << '\n';
  }
}

DiagnosticsSeries run(KineticState& state, double t_end, double dt, int record_every,
                      const RunHooks& hooks) {
  if (t_end < 0.0) throw std::invalid_argument("run: t_end must be nonnegative");
  if (record_every < 1) throw std::invalid_argument("run: record_every must be >= 1");
  DiagnosticsSeries diag;
  diag.append(state);
  if (hooks.on_record) hooks.on_record(state, diag);
  if (t_end == 0.0) return diag;
  if (!(dt > 0.0)) throw std::invalid_argument("run: dt must be > 0");

  const auto steps = static_cast<int64_t>(std::llround(t_end / dt));
  for (int64_t s = 1; s <= steps; ++s) {
    push(state, dt);
    if (s % record_every == 0 || s == steps) {
      diag.append(state);
      if (hooks.on_record) hooks.on_record(state, diag);
    }
  }
  return diag;
}

}  // namespace quasipic
