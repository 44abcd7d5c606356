#include "quasipic/transport.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <thread>

#include "quasipic/cic.hpp"

namespace quasipic {

namespace {

std::atomic<int> g_threads{0};  // 0 = hardware concurrency

int resolve_threads() {
  int t = g_threads.load();
  if (t > 0) return t;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// static contiguous split; every index is processed exactly once and writes
// only its own slots, so the worker count cannot change results
template <class F>
void parallel_for(int64_t n, F&& fn) {
  const int nt = std::min<int64_t>(resolve_threads(), std::max<int64_t>(n, 1));
  if (nt <= 1) {
    for (int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(nt));
  const int64_t chunk = (n + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    const int64_t lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] {
      for (int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

struct CostEval {
  const ParticleEnsemble* mu;
  const ParticleEnsemble* nu;
  int dim;
  int p;

  double operator()(int64_t i, int64_t j) const {
    const double d = ground_distance(mu->positions[static_cast<size_t>(i)],
                                     mu->velocities[static_cast<size_t>(i)],
                                     nu->positions[static_cast<size_t>(j)],
                                     nu->velocities[static_cast<size_t>(j)], dim);
    return p == 1 ? d : d * d;
  }
};

void check_pair(const ParticleEnsemble& mu, const ParticleEnsemble& nu, int p) {
  mu.check_consistent();
  nu.check_consistent();
  if (mu.dim != nu.dim) throw std::invalid_argument("transport: dimension mismatch");
  if (p != 1 && p != 2) throw std::invalid_argument("transport: p must be 1 or 2");
  if (mu.size() == 0 || nu.size() == 0) throw std::invalid_argument("transport: empty ensemble");
}

bool uniform_weights(const ParticleEnsemble& e) {
  const double w0 = e.weights[0];
  for (double w : e.weights)
    if (std::abs(w - w0) > 1e-14 * std::max(1.0, std::abs(w0))) return false;
  return true;
}

// Shortest augmenting path assignment with dual potentials; exact optimum
// for the given matrix.
std::vector<int> solve_assignment(const std::vector<double>& cost, int n) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<size_t>(n) + 1, 0), way(static_cast<size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<size_t>(n) + 1, 0);
    do {
      used[static_cast<size_t>(j0)] = 1;
      const int i0 = match[static_cast<size_t>(j0)];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double cur =
            cost[static_cast<size_t>(i0 - 1) * n + (j - 1)] - u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(match[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<size_t>(j0)];
      match[static_cast<size_t>(j0)] = match[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(static_cast<size_t>(n), -1);
  for (int j = 1; j <= n; ++j) row_to_col[static_cast<size_t>(match[static_cast<size_t>(j)] - 1)] = j - 1;
  return row_to_col;
}

// Transportation simplex on the dense bipartite problem. Basic cells form a
// spanning tree over row and column nodes; Dantzig entering rule with a
// deterministic leaving tie-break.
struct SimplexSolver {
  int m, n;
  const std::vector<double>& cost;  // m x n
  std::vector<double> a, b;

  struct Arc {
    int i, j;
    double flow;
    bool active;
  };
  std::vector<Arc> arcs;
  std::vector<int> cell_arc;               // m*n -> arc id or -1
  std::vector<std::vector<int>> adjacency;  // node (rows 0..m-1, cols m..m+n-1) -> arc ids

  SimplexSolver(int m_, int n_, const std::vector<double>& c, std::vector<double> a_, std::vector<double> b_)
      : m(m_), n(n_), cost(c), a(std::move(a_)), b(std::move(b_)) {
    cell_arc.assign(static_cast<size_t>(m) * n, -1);
    adjacency.assign(static_cast<size_t>(m + n), {});
  }

  int add_arc(int i, int j, double flow) {
    const int id = static_cast<int>(arcs.size());
    arcs.push_back({i, j, flow, true});
    cell_arc[static_cast<size_t>(i) * n + j] = id;
    adjacency[static_cast<size_t>(i)].push_back(id);
    adjacency[static_cast<size_t>(m + j)].push_back(id);
    return id;
  }

  void drop_arc(int id) {
    arcs[static_cast<size_t>(id)].active = false;
    const Arc& arc = arcs[static_cast<size_t>(id)];
    cell_arc[static_cast<size_t>(arc.i) * n + arc.j] = -1;
    auto scrub = [&](int node) {
      auto& lst = adjacency[static_cast<size_t>(node)];
      lst.erase(std::remove(lst.begin(), lst.end(), id), lst.end());
    };
    scrub(arc.i);
    scrub(m + arc.j);
  }

  void northwest_init() {
    double ar = a[0], br = b[0];
    int i = 0, j = 0;
    while (true) {
      const double x = std::min(ar, br);
      add_arc(i, j, x);
      ar -= x;
      br -= x;
      if (i == m - 1 && j == n - 1) break;
      if ((ar <= br && i < m - 1) || j == n - 1) {
        ++i;
        ar = a[static_cast<size_t>(i)];
      } else {
        ++j;
        br = b[static_cast<size_t>(j)];
      }
    }
  }

  // duals from the spanning tree: u_i + v_j = c_ij on basic cells
  void compute_duals(std::vector<double>& u, std::vector<double>& v) const {
    u.assign(static_cast<size_t>(m), 0.0);
    v.assign(static_cast<size_t>(n), 0.0);
    std::vector<char> seen(static_cast<size_t>(m + n), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      for (int id : adjacency[static_cast<size_t>(node)]) {
        const Arc& arc = arcs[static_cast<size_t>(id)];
        const int other = node < m ? m + arc.j : arc.i;
        if (seen[static_cast<size_t>(other)]) continue;
        seen[static_cast<size_t>(other)] = 1;
        if (node < m)
          v[static_cast<size_t>(arc.j)] = cost[static_cast<size_t>(arc.i) * n + arc.j] - u[static_cast<size_t>(node)];
        else
          u[static_cast<size_t>(arc.i)] = cost[static_cast<size_t>(arc.i) * n + arc.j] - v[static_cast<size_t>(node - m)];
        stack.push_back(other);
      }
    }
  }

  // tree path between two nodes as a list of arc ids
  std::vector<int> tree_path(int from, int to) const {
    std::vector<int> parent_arc(static_cast<size_t>(m + n), -1);
    std::vector<int> parent(static_cast<size_t>(m + n), -1);
    std::vector<char> seen(static_cast<size_t>(m + n), 0);
    std::vector<int> queue{from};
    seen[static_cast<size_t>(from)] = 1;
    for (size_t qi = 0; qi < queue.size(); ++qi) {
      const int node = queue[qi];
      if (node == to) break;
      for (int id : adjacency[static_cast<size_t>(node)]) {
        const Arc& arc = arcs[static_cast<size_t>(id)];
        const int other = node < m ? m + arc.j : arc.i;
        if (seen[static_cast<size_t>(other)]) continue;
        seen[static_cast<size_t>(other)] = 1;
        parent[static_cast<size_t>(other)] = node;
        parent_arc[static_cast<size_t>(other)] = id;
        queue.push_back(other);
      }
    }
    std::vector<int> path;
    for (int node = to; node != from; node = parent[static_cast<size_t>(node)]) {
      if (node < 0) throw std::logic_error("transport simplex: basis is not a tree");
      path.push_back(parent_arc[static_cast<size_t>(node)]);
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  void solve(double opt_tol) {
    northwest_init();
    std::vector<double> u, v;
    const int64_t max_pivots = 400LL * (m + n) + 4000;
    for (int64_t pivot = 0;; ++pivot) {
      if (pivot > max_pivots) throw std::runtime_error("transport simplex: pivot budget exceeded");
      compute_duals(u, v);
      int best_i = -1, best_j = -1;
      double best_rc = -opt_tol;
      for (int i = 0; i < m; ++i) {
        const double ui = u[static_cast<size_t>(i)];
        const double* crow = cost.data() + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
          if (cell_arc[static_cast<size_t>(i) * n + j] >= 0) continue;
          const double rc = crow[j] - ui - v[static_cast<size_t>(j)];
          if (rc < best_rc) {
            best_rc = rc;
            best_i = i;
            best_j = j;
          }
        }
      }
      if (best_i < 0) return;  // dual feasible: optimal

      // cycle = entering cell + tree path from its column back to its row;
      // signs alternate starting with + on the entering cell
      const std::vector<int> path = tree_path(m + best_j, best_i);
      double theta = std::numeric_limits<double>::infinity();
      int leave = -1;
      for (size_t t = 0; t < path.size(); t += 2) {  // minus positions
        const Arc& arc = arcs[static_cast<size_t>(path[t])];
        if (leave < 0 || arc.flow < theta) {
          theta = arc.flow;
          leave = path[t];
        }
      }
      if (leave < 0) throw std::logic_error("transport simplex: unbounded pivot");
      for (size_t t = 0; t < path.size(); ++t) {
        Arc& arc = arcs[static_cast<size_t>(path[t])];
        arc.flow += (t % 2 == 0) ? -theta : theta;
      }
      drop_arc(leave);
      add_arc(best_i, best_j, theta);
    }
  }
};

double kahan_cost_blocks(const std::vector<double>& terms) {
  // fixed 256-block tree keeps the reduction independent of threading
  const size_t nblocks = 256;
  const size_t n = terms.size();
  const size_t chunk = (n + nblocks - 1) / nblocks;
  KahanSum total;
  for (size_t b = 0; b < nblocks; ++b) {
    const size_t lo = b * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    KahanSum s;
    for (size_t i = lo; i < hi; ++i) s.add(terms[i]);
    total.add(s.value());
  }
  return total.value();
}

}  // namespace

void set_global_threads(int n) { g_threads.store(n); }
int global_threads() { return resolve_threads(); }

double brute_force_w(const ParticleEnsemble& mu, const ParticleEnsemble& nu, int p) {
  check_pair(mu, nu, p);
  const int n = static_cast<int>(mu.size());
  if (n != static_cast<int>(nu.size()) || n > 8)
    throw std::invalid_argument("brute_force_w: needs equal counts with n <= 8");
  if (!uniform_weights(mu) || !uniform_weights(nu))
    throw std::invalid_argument("brute_force_w: needs equal weights");
  const CostEval c{&mu, &nu, mu.dim, p};
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += c(i, perm[static_cast<size_t>(i)]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  const double cost = best * mu.weights[0];
  return p == 1 ? cost : std::sqrt(cost);
}

TransportPlan w_exact(const ParticleEnsemble& mu, const ParticleEnsemble& nu, int p,
                      const TransportOptions& opts) {
  check_pair(mu, nu, p);
  const int64_t m = static_cast<int64_t>(mu.size());
  const int64_t n = static_cast<int64_t>(nu.size());
  if (m + n > opts.size_cap) throw std::invalid_argument("w_exact: size cap exceeded");
  const double mass_mu = mu.total_mass();
  const double mass_nu = nu.total_mass();
  if (std::abs(mass_mu - mass_nu) > opts.mass_tol * std::max(1.0, mass_mu))
    throw std::invalid_argument("w_exact: total masses differ");

  const CostEval c{&mu, &nu, mu.dim, p};
  TransportPlan plan;
  plan.p = p;

  if (m == n && uniform_weights(mu) && uniform_weights(nu)) {
    std::vector<double> cost(static_cast<size_t>(m) * n);
    parallel_for(m, [&](int64_t i) {
      for (int64_t j = 0; j < n; ++j) cost[static_cast<size_t>(i) * n + j] = c(i, j);
    });
    const std::vector<int> row_to_col = solve_assignment(cost, static_cast<int>(m));
    const double w = mu.weights[0];
    std::vector<double> terms(static_cast<size_t>(m));
    plan.coupling.reserve(static_cast<size_t>(m));
    for (int64_t i = 0; i < m; ++i) {
      const int64_t j = row_to_col[static_cast<size_t>(i)];
      terms[static_cast<size_t>(i)] = w * cost[static_cast<size_t>(i) * n + j];
      plan.coupling.push_back({i, j, w});
    }
    plan.cost = kahan_cost_blocks(terms);
    plan.is_assignment = true;
  } else {
    std::vector<double> cost(static_cast<size_t>(m) * n);
    parallel_for(m, [&](int64_t i) {
      for (int64_t j = 0; j < n; ++j) cost[static_cast<size_t>(i) * n + j] = c(i, j);
    });
    std::vector<double> b = nu.weights;
    // fold the (sub-tolerance) mass discrepancy into the largest demand
    const auto bmax = std::max_element(b.begin(), b.end());
    *bmax += mass_mu - mass_nu;
    double scale = 0.0;
    for (double x : cost) scale = std::max(scale, x);
    SimplexSolver solver(static_cast<int>(m), static_cast<int>(n), cost, mu.weights, b);
    solver.solve(1e-12 * std::max(1.0, scale));
    std::vector<double> terms;
    terms.reserve(solver.arcs.size());
    for (const auto& arc : solver.arcs) {
      if (!arc.active || arc.flow <= 0.0) continue;
      plan.coupling.push_back({arc.i, arc.j, arc.flow});
      terms.push_back(arc.flow * cost[static_cast<size_t>(arc.i) * n + arc.j]);
    }
    plan.cost = kahan_cost_blocks(terms);
  }
  plan.cost = std::max(plan.cost, 0.0);
  plan.distance = p == 1 ? plan.cost : std::sqrt(plan.cost);
  return plan;
}

SinkhornResult w_sinkhorn(const ParticleEnsemble& mu, const ParticleEnsemble& nu, int p, double reg,
                          int iters) {
  check_pair(mu, nu, p);
  const int64_t m = static_cast<int64_t>(mu.size());
  const int64_t n = static_cast<int64_t>(nu.size());
  const double mass = mu.total_mass();
  if (std::abs(mass - nu.total_mass()) > 1e-9 * std::max(1.0, mass))
    throw std::invalid_argument("w_sinkhorn: total masses differ");
  const CostEval c{&mu, &nu, mu.dim, p};

  double max_cost = 0.0;
  {
    std::vector<double> row_max(static_cast<size_t>(m), 0.0);
    parallel_for(m, [&](int64_t i) {
      double mx = 0.0;
      for (int64_t j = 0; j < n; ++j) mx = std::max(mx, c(i, j));
      row_max[static_cast<size_t>(i)] = mx;
    });
    for (double x : row_max) max_cost = std::max(max_cost, x);
  }
  if (max_cost == 0.0) return {0.0, 0.0, 0};  // coincident point sets
  if (reg <= 0.0) reg = 3e-4 * max_cost;

  std::vector<double> log_a(static_cast<size_t>(m)), log_b(static_cast<size_t>(n));
  for (int64_t i = 0; i < m; ++i) log_a[static_cast<size_t>(i)] = std::log(mu.weights[static_cast<size_t>(i)] / mass);
  for (int64_t j = 0; j < n; ++j) log_b[static_cast<size_t>(j)] = std::log(nu.weights[static_cast<size_t>(j)] / mass);

  std::vector<double> f(static_cast<size_t>(m), 0.0), g(static_cast<size_t>(n), 0.0);

  std::vector<double> etas;
  for (double e = max_cost / 2.0; e > reg; e /= 2.0) etas.push_back(e);
  etas.push_back(reg);

  const double marginal_tol = 1e-6;
  int total_iters = 0;
  double err = std::numeric_limits<double>::infinity();

  // plan: pi_ij = exp((f_i + g_j - c_ij) / eta) a_i b_j
  auto column_error = [&](double eta) {
    std::vector<double> col_err(static_cast<size_t>(n));
    parallel_for(n, [&](int64_t j) {
      thread_local std::vector<double> buf;
      buf.resize(static_cast<size_t>(m));
      double mx = -std::numeric_limits<double>::infinity();
      for (int64_t i = 0; i < m; ++i) {
        buf[static_cast<size_t>(i)] = (f[static_cast<size_t>(i)] + g[static_cast<size_t>(j)] - c(i, j)) / eta +
                                      log_a[static_cast<size_t>(i)] + log_b[static_cast<size_t>(j)];
        mx = std::max(mx, buf[static_cast<size_t>(i)]);
      }
      double s = 0.0;
      for (int64_t i = 0; i < m; ++i) s += std::exp(buf[static_cast<size_t>(i)] - mx);
      col_err[static_cast<size_t>(j)] = std::abs(std::exp(mx) * s - std::exp(log_b[static_cast<size_t>(j)]));
    });
    KahanSum s;
    for (double x : col_err) s.add(x);
    return s.value();
  };

  for (size_t stage = 0; stage < etas.size(); ++stage) {
    const double eta = etas[stage];
    const bool last = stage + 1 == etas.size();
    const double stage_tol = last ? marginal_tol / 10.0 : 1e-3;
    const int stage_budget = std::max(8, iters / static_cast<int>(etas.size()));
    for (int it = 0; it < stage_budget; ++it) {
      parallel_for(n, [&](int64_t j) {
        thread_local std::vector<double> buf;
        buf.resize(static_cast<size_t>(m));
        double mx = -std::numeric_limits<double>::infinity();
        for (int64_t i = 0; i < m; ++i) {
          buf[static_cast<size_t>(i)] = (f[static_cast<size_t>(i)] - c(i, j)) / eta + log_a[static_cast<size_t>(i)];
          mx = std::max(mx, buf[static_cast<size_t>(i)]);
        }
        double s = 0.0;
        for (int64_t i = 0; i < m; ++i) s += std::exp(buf[static_cast<size_t>(i)] - mx);
        g[static_cast<size_t>(j)] = -eta * (mx + std::log(s));
      });
      parallel_for(m, [&](int64_t i) {
        thread_local std::vector<double> buf;
        buf.resize(static_cast<size_t>(n));
        double mx = -std::numeric_limits<double>::infinity();
        for (int64_t j = 0; j < n; ++j) {
          buf[static_cast<size_t>(j)] = (g[static_cast<size_t>(j)] - c(i, j)) / eta + log_b[static_cast<size_t>(j)];
          mx = std::max(mx, buf[static_cast<size_t>(j)]);
        }
        double s = 0.0;
        for (int64_t j = 0; j < n; ++j) s += std::exp(buf[static_cast<size_t>(j)] - mx);
        f[static_cast<size_t>(i)] = -eta * (mx + std::log(s));
      });
      ++total_iters;
      if (it % 4 == 3 || it + 1 == stage_budget) {
        err = column_error(eta);
        if (err < stage_tol) break;
      }
    }
  }

  err = column_error(reg);
  if (!(err <= marginal_tol))
    throw std::runtime_error("w_sinkhorn: marginal error " + std::to_string(err) +
                             " above tolerance after iteration budget");

  // transported cost under the final plan
  std::vector<double> row_cost(static_cast<size_t>(m), 0.0);
  parallel_for(m, [&](int64_t i) {
    KahanSum s;
    for (int64_t j = 0; j < n; ++j) {
      const double cij = c(i, j);
      const double lp = (f[static_cast<size_t>(i)] + g[static_cast<size_t>(j)] - cij) / reg +
                        log_a[static_cast<size_t>(i)] + log_b[static_cast<size_t>(j)];
      s.add(std::exp(lp) * cij);
    }
    row_cost[static_cast<size_t>(i)] = s.value();
  });
  const double cost = std::max(0.0, kahan_cost_blocks(row_cost)) * mass;
  SinkhornResult res;
  res.distance = p == 1 ? cost : std::sqrt(cost);
  res.marginal_error = err;
  res.iterations = total_iters;
  return res;
}

ParticleEnsemble translate_velocities(const ParticleEnsemble& mu, const GriddedField& shift) {
  if (shift.components != shift.grid.dim || shift.grid.dim != mu.dim)
    throw std::invalid_argument("translate_velocities: shift must be a vector field of matching dimension");
  ParticleEnsemble out = mu;
  for (size_t i = 0; i < out.size(); ++i) out.velocities[i] += interpolate(shift, out.positions[i]);
  return out;
}

}  // namespace quasipic
