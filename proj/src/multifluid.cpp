#include "quasipic/multifluid.hpp"

#include <algorithm>

namespace quasipic {

void FluidFamily::check_consistent() const {
  if (theta_nodes.size() != theta_weights.size() || theta_nodes.size() != rho.size() ||
      theta_nodes.size() != vel.size())
    throw std::invalid_argument("fluid family: array lengths differ");
  for (const auto& r : rho)
    if (r.grid != grid || r.components != 1) throw std::invalid_argument("fluid family: bad density field");
  for (const auto& v : vel)
    if (v.grid != grid || v.components != grid.dim)
      throw std::invalid_argument("fluid family: bad velocity field");
}

namespace {

// adaptive Simpson on [a, b]
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
  struct Rec {
    static double go(const std::function<double(double)>& f, double a, double m, double b, double fa,
                     double fm, double fb, double whole, double tol, int depth) {
      const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      if (depth > 48) throw std::runtime_error("quadrature did not converge");
      if (std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
      return go(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
             go(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
    }
  };
  const double m = 0.5 * (a + b), fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return Rec::go(f, a, m, b, fa, fm, fb, whole, tol, 0);
}

double sphere_area(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * M_PI;
    case 3: return 4.0 * M_PI;
  }
  throw std::invalid_argument("dimension must be 1, 2 or 3");
}

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(static_cast<size_t>(n));
  w.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      if (n == 1) { p1 = t; }
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double step = p1 / dp;
      t -= step;
      if (std::abs(step) < 1e-15) break;
    }
    x[static_cast<size_t>(i)] = t;
    w[static_cast<size_t>(i)] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
  std::sort(x.begin(), x.end());
}

double mu_density(const Vec& theta, int dim, double c_d) {
  return c_d / (1.0 + std::pow(theta.norm(), dim + 1));
}

}  // namespace

double normalizing_constant(int dim, double rel_tol) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
  // radial integral mapped onto [0, 1) by r = u / (1 - u)
  auto integrand = [dim](double u) {
    const double r = u / (1.0 - u);
    const double jac = 1.0 / ((1.0 - u) * (1.0 - u));
    return std::pow(r, dim - 1) / (1.0 + std::pow(r, dim + 1)) * jac;
  };
  const double radial = adaptive_simpson(integrand, 0.0, 1.0 - 1e-12, rel_tol);
  return 1.0 / (sphere_area(dim) * radial);
}

ThetaQuadrature discretize_mu(int dim, int nodes_per_axis, double cutoff) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
  if (nodes_per_axis < 1) throw std::invalid_argument("discretize_mu: need at least one node");
  if (!(cutoff > 0.0)) throw std::invalid_argument("discretize_mu: cutoff must be positive");
  const double c_d = normalizing_constant(dim);

  std::vector<double> gx, gw;
  gauss_legendre(nodes_per_axis, gx, gw);

  ThetaQuadrature q;
  KahanSum covered;
  const int total = static_cast<int>(std::pow(nodes_per_axis, dim));
  for (int flat = 0; flat < total; ++flat) {
    int rem = flat;
    Vec theta;
    double w = 1.0;
    for (int a = 0; a < dim; ++a) {
      const int i = rem % nodes_per_axis;
      rem /= nodes_per_axis;
      theta[a] = cutoff * gx[static_cast<size_t>(i)];
      w *= cutoff * gw[static_cast<size_t>(i)];
    }
    w *= mu_density(theta, dim, c_d);
    q.nodes.push_back(theta);
    q.weights.push_back(w);
    covered.add(w);
  }

  // covered mass from a dense rule so the tail check does not depend on the
  // requested node count
  {
    std::vector<double> dx, dw;
    gauss_legendre(64, dx, dw);
    KahanSum dense;
    const int dtotal = static_cast<int>(std::pow(64, dim));
    for (int flat = 0; flat < dtotal; ++flat) {
      int rem = flat;
      Vec theta;
      double w = 1.0;
      for (int a = 0; a < dim; ++a) {
        const int i = rem % 64;
        rem /= 64;
        theta[a] = cutoff * dx[static_cast<size_t>(i)];
        w *= cutoff * dw[static_cast<size_t>(i)];
      }
      dense.add(w * mu_density(theta, dim, c_d));
    }
    q.discarded_mass = std::max(0.0, 1.0 - dense.value());
  }
  if (nodes_per_axis > 1 && q.discarded_mass > 1e-4)
    throw std::invalid_argument("discretize_mu: discarded mu mass " + std::to_string(q.discarded_mass) +
                                " exceeds 1e-4; enlarge the cutoff");

  double sum = 0.0;
  for (double w : q.weights) sum += w;
  for (double& w : q.weights) w /= sum;
  return q;
}

GriddedField total_density(const FluidFamily& f) {
  GriddedField out(f.grid, 1);
  for (size_t t = 0; t < f.nodes(); ++t) {
    const double w = f.theta_weights[t];
    for (size_t i = 0; i < out.values.size(); ++i) out.values[i] += w * f.rho[t].values[i];
  }
  return out;
}

GriddedField mean_current(const FluidFamily& f) {
  GriddedField out(f.grid, f.grid.dim);
  for (size_t t = 0; t < f.nodes(); ++t) {
    const double w = f.theta_weights[t];
    for (int c = 0; c < f.grid.dim; ++c) {
      const double* r = f.rho[t].component(0);
      const double* v = f.vel[t].component(c);
      double* o = out.component(c);
      for (int64_t i = 0; i < out.cells(); ++i) o[i] += w * r[i] * v[i];
    }
  }
  return out;
}

namespace {

// E with div E = div div (sum_theta w rho v x v), curl E = 0, zero mean
GriddedField limit_field(const FluidFamily& f) {
  const TorusGrid& g = f.grid;
  const int d = g.dim;
  // momentum flux tensor, symmetric, d(d+1)/2 distinct entries
  SpectralField div_div(g, 1);
  for (int a = 0; a < d; ++a) {
    for (int b = a; b < d; ++b) {
      GriddedField m_ab(g, 1);
      for (size_t t = 0; t < f.nodes(); ++t) {
        const double w = f.theta_weights[t];
        const double* r = f.rho[t].component(0);
        const double* va = f.vel[t].component(a);
        const double* vb = f.vel[t].component(b);
        for (int64_t i = 0; i < g.total_cells(); ++i) m_ab.values[static_cast<size_t>(i)] += w * r[i] * va[i] * vb[i];
      }
      SpectralField m_hat = forward_transform(m_ab);
      dealias_two_thirds(m_hat);
      const double mult = (a == b) ? 1.0 : 2.0;
      const int nyq = g.cells / 2;
      for (int64_t i = 0; i < g.total_cells(); ++i) {
        int bins[3];
        decode_index(i, g, bins);
        int ka = signed_mode(bins[a], g.cells);
        int kb = signed_mode(bins[b], g.cells);
        if (ka == nyq) ka = 0;
        if (kb == nyq) kb = 0;
        div_div.coefficients[static_cast<size_t>(i)] +=
            mult * (-4.0 * M_PI * M_PI * ka * kb) * m_hat.coefficients[static_cast<size_t>(i)];
      }
    }
  }
  SpectralField e_hat(g, d);
  const int nyq = g.cells / 2;
  for (int64_t i = 0; i < g.total_cells(); ++i) {
    int bins[3];
    decode_index(i, g, bins);
    double k2 = 0.0;
    for (int a = 0; a < d; ++a) {
      const double k = signed_mode(bins[a], g.cells);
      k2 += k * k;
    }
    if (k2 == 0.0) continue;
    const std::complex<double> p_hat = div_div.coefficients[static_cast<size_t>(i)] / (4.0 * M_PI * M_PI * k2);
    for (int a = 0; a < d; ++a) {
      int ka = signed_mode(bins[a], g.cells);
      if (ka == nyq) ka = 0;
      e_hat.component(a)[i] = std::complex<double>(0.0, -2.0 * M_PI * ka) * p_hat;
    }
  }
  return inverse_transform_real(e_hat);
}

}  // namespace

GriddedField family_field(const FluidFamily& f) {
  if (f.limit_mode) return limit_field(f);
  return solve_potential(total_density(f), f.epsilon).field;
}

FluidEnergy family_energy(const FluidFamily& f) {
  FluidEnergy e;
  KahanSum kin;
  const double vol = f.grid.cell_volume();
  for (size_t t = 0; t < f.nodes(); ++t) {
    const double w = f.theta_weights[t];
    const double* r = f.rho[t].component(0);
    for (int64_t i = 0; i < f.grid.total_cells(); ++i) {
      double v2 = 0.0;
      for (int c = 0; c < f.grid.dim; ++c) {
        const double v = f.vel[t].component(c)[i];
        v2 += v * v;
      }
      kin.add(0.5 * w * r[i] * v2 * vol);
    }
  }
  e.kinetic = kin.value();
  if (!f.limit_mode) e.field = solve_potential(total_density(f), f.epsilon).field_energy;
  e.total = e.kinetic + e.field;
  return e;
}

namespace {

struct FamilyRhs {
  std::vector<GriddedField> drho;
  std::vector<GriddedField> dvel;
};

// conservative mass flux and advective velocity derivative, spectral with
// 2/3 dealiasing of the quadratic terms
FamilyRhs family_rhs(const FluidFamily& f, const GriddedField& field) {
  const TorusGrid& g = f.grid;
  FamilyRhs rhs;
  rhs.drho.reserve(f.nodes());
  rhs.dvel.reserve(f.nodes());
  for (size_t t = 0; t < f.nodes(); ++t) {
    GriddedField flux(g, g.dim);
    for (int c = 0; c < g.dim; ++c) {
      const double* r = f.rho[t].component(0);
      const double* v = f.vel[t].component(c);
      double* o = flux.component(c);
      for (int64_t i = 0; i < g.total_cells(); ++i) o[i] = r[i] * v[i];
    }
    SpectralField flux_hat = forward_transform(flux);
    dealias_two_thirds(flux_hat);
    SpectralField div_hat = divergence(flux_hat);
    GriddedField drho = inverse_transform_real(div_hat);
    for (auto& x : drho.values) x = -x;
    rhs.drho.push_back(std::move(drho));

    // (v . grad) v via spectral gradients of each component
    SpectralField v_hat = forward_transform(f.vel[t]);
    GriddedField dvel(g, g.dim);
    for (int c = 0; c < g.dim; ++c) {
      SpectralField comp(g, 1);
      std::copy_n(v_hat.component(c), g.total_cells(), comp.component(0));
      SpectralField grad_hat = gradient(comp);
      GriddedField grad = inverse_transform_real(grad_hat);
      double* o = dvel.component(c);
      const double* e = field.component(c);
      for (int64_t i = 0; i < g.total_cells(); ++i) {
        double adv = 0.0;
        for (int a = 0; a < g.dim; ++a) adv += f.vel[t].component(a)[i] * grad.component(a)[i];
        o[i] = -adv + e[i];
      }
    }
    SpectralField dvel_hat = forward_transform(dvel);
    dealias_two_thirds(dvel_hat);
    rhs.dvel.push_back(inverse_transform_real(dvel_hat));
  }
  return rhs;
}

void axpy(FluidFamily& y, double a, const FamilyRhs& x) {
  for (size_t t = 0; t < y.nodes(); ++t) {
    for (size_t i = 0; i < y.rho[t].values.size(); ++i) y.rho[t].values[i] += a * x.drho[t].values[i];
    for (size_t i = 0; i < y.vel[t].values.size(); ++i) y.vel[t].values[i] += a * x.dvel[t].values[i];
  }
}

double max_speed(const FluidFamily& f) {
  double m = 0.0;
  for (size_t t = 0; t < f.nodes(); ++t) {
    for (int64_t i = 0; i < f.grid.total_cells(); ++i) {
      double v2 = 0.0;
      for (int c = 0; c < f.grid.dim; ++c) {
        const double v = f.vel[t].component(c)[i];
        v2 += v * v;
      }
      m = std::max(m, v2);
    }
  }
  return std::sqrt(m);
}

void check_positivity(const FluidFamily& f) {
  for (size_t t = 0; t < f.nodes(); ++t)
    for (double r : f.rho[t].values)
      if (r < -1e-8)
        throw std::runtime_error("fluid density went negative (" + std::to_string(r) +
                                 "): approaching blowup, aborting");
}

void rk4_step(FluidFamily& f, double dt) {
  f.check_consistent();
  const double vmax = max_speed(f);
  if (dt * vmax > f.grid.spacing * (1.0 + 1e-12))
    throw std::runtime_error("fluid CFL violation: dt * vmax = " + std::to_string(dt * vmax) +
                             " exceeds spacing");

  const FluidFamily& y0 = f;
  FamilyRhs k1 = family_rhs(y0, family_field(y0));

  FluidFamily y = y0;
  axpy(y, 0.5 * dt, k1);
  FamilyRhs k2 = family_rhs(y, family_field(y));

  y = y0;
  axpy(y, 0.5 * dt, k2);
  FamilyRhs k3 = family_rhs(y, family_field(y));

  y = y0;
  axpy(y, dt, k3);
  FamilyRhs k4 = family_rhs(y, family_field(y));

  axpy(f, dt / 6.0, k1);
  axpy(f, dt / 3.0, k2);
  axpy(f, dt / 3.0, k3);
  axpy(f, dt / 6.0, k4);
  f.time += dt;
  check_positivity(f);
}

}  // namespace

void multifluid_step(FluidFamily& f, double dt) {
  if (f.limit_mode) throw std::invalid_argument("multifluid_step: family is in limit mode");
  if (!(dt > 0.0)) throw std::invalid_argument("multifluid_step: dt must be > 0");
  rk4_step(f, dt);
}

void check_limit_initial_data(const FluidFamily& f, double tol) {
  GriddedField s = total_density(f);
  for (double v : s.values)
    if (std::abs(v - 1.0) > tol)
      throw std::invalid_argument("limit system: initial densities must satisfy the unit constraint");
  SpectralField j_hat = forward_transform(mean_current(f));
  SpectralField div_hat = divergence(j_hat);
  double m = 0.0;
  for (const auto& z : div_hat.coefficients) m = std::max(m, std::abs(z));
  if (m > 1e-6)
    throw std::invalid_argument("limit system: initial mean current must be divergence free");
}

void limit_step(FluidFamily& f, double dt) {
  if (!f.limit_mode) throw std::invalid_argument("limit_step: family is not in limit mode");
  if (!(dt > 0.0)) throw std::invalid_argument("limit_step: dt must be > 0");
  rk4_step(f, dt);

  // constraint drift check, then projection back to unit total density
  GriddedField s = total_density(f);
  double drift = 0.0;
  for (double v : s.values) drift = std::max(drift, std::abs(v - 1.0));
  if (drift > 1e-6)
    throw std::runtime_error("limit system: constraint drift " + std::to_string(drift) +
                             " above 1e-6 before projection");
  for (size_t t = 0; t < f.nodes(); ++t)
    for (size_t i = 0; i < f.rho[t].values.size(); ++i) f.rho[t].values[i] /= s.values[i];
}

ParticleEnsemble superpose(const FluidFamily& f, int particles_per_cell) {
  f.check_consistent();
  const TorusGrid& g = f.grid;
  const int d = g.dim;
  int r = 1;
  while (std::pow(r + 1, d) <= particles_per_cell + 0.5) ++r;
  if (static_cast<int>(std::llround(std::pow(r, d))) != particles_per_cell)
    throw std::invalid_argument("superpose: particles_per_cell must be a d-th power");
  for (size_t t = 0; t < f.nodes(); ++t)
    for (double v : f.rho[t].values)
      if (v < -1e-10) throw std::invalid_argument("superpose: densities must be nonnegative");

  const double sub_h = g.spacing / r;
  const int sub_cells = g.cells * r;
  const double w_cell = g.cell_volume() / particles_per_cell;

  ParticleEnsemble e;
  e.dim = d;
  const int64_t sub_total = static_cast<int64_t>(std::pow(sub_cells, d));
  e.positions.reserve(static_cast<size_t>(sub_total) * f.nodes());
  for (int64_t flat = 0; flat < sub_total; ++flat) {
    int64_t rem = flat;
    Vec x;
    for (int a = d - 1; a >= 0; --a) {
      x[a] = static_cast<double>(rem % sub_cells) * sub_h;
      rem /= sub_cells;
    }
    for (size_t t = 0; t < f.nodes(); ++t) {
      const double rho_x = interpolate_scalar(f.rho[t], x);
      const double w = f.theta_weights[t] * std::max(rho_x, 0.0) * w_cell;
      e.positions.push_back(x);
      e.velocities.push_back(interpolate(f.vel[t], x));
      e.weights.push_back(w);
    }
  }
  return e;
}

FluidTracers make_tracers(const FluidFamily& f, int particles_per_cell) {
  FluidTracers tr;
  tr.ensemble = superpose(f, particles_per_cell);
  const size_t per_site = f.nodes();
  tr.theta_index.resize(tr.ensemble.size());
  for (size_t i = 0; i < tr.ensemble.size(); ++i) tr.theta_index[i] = static_cast<int>(i % per_site);
  return tr;
}

void advect_tracers(FluidTracers& tracers, const FluidFamily& before, const FluidFamily& after,
                    double dt) {
  const int d = before.grid.dim;
  for (size_t i = 0; i < tracers.ensemble.size(); ++i) {
    const int t = tracers.theta_index[i];
    Vec x = tracers.ensemble.positions[i];
    const Vec v0 = interpolate(before.vel[static_cast<size_t>(t)], x);
    const Vec xs = wrap01(x + dt * v0, d);
    const Vec v1 = interpolate(after.vel[static_cast<size_t>(t)], xs);
    const Vec x1 = wrap01(x + (0.5 * dt) * (v0 + v1), d);
    tracers.ensemble.positions[i] = x1;
    tracers.ensemble.velocities[i] = interpolate(after.vel[static_cast<size_t>(t)], x1);
  }
}

}  // namespace quasipic
