#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "quasipic/harness.hpp"
#include "quasipic/snapshot.hpp"

namespace py = pybind11;
using namespace quasipic;

namespace {

ParticleEnsemble ensemble_from_arrays(py::array_t<double, py::array::c_style | py::array::forcecast> x,
                                      py::array_t<double, py::array::c_style | py::array::forcecast> v,
                                      py::object weights) {
  if (x.ndim() != 2 || v.ndim() != 2) throw std::invalid_argument("positions/velocities must be (n, d)");
  const auto n = x.shape(0);
  const auto d = x.shape(1);
  if (v.shape(0) != n || v.shape(1) != d) throw std::invalid_argument("positions/velocities shapes differ");
  if (d < 1 || d > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
  ParticleEnsemble e;
  e.dim = static_cast<int>(d);
  e.positions.resize(static_cast<size_t>(n));
  e.velocities.resize(static_cast<size_t>(n));
  auto xr = x.unchecked<2>();
  auto vr = v.unchecked<2>();
  for (py::ssize_t i = 0; i < n; ++i)
    for (py::ssize_t a = 0; a < d; ++a) {
      e.positions[static_cast<size_t>(i)][static_cast<int>(a)] = xr(i, a);
      e.velocities[static_cast<size_t>(i)][static_cast<int>(a)] = vr(i, a);
    }
  if (weights.is_none()) {
    e.weights.assign(static_cast<size_t>(n), 1.0 / static_cast<double>(n));
  } else {
    auto w = weights.cast<py::array_t<double, py::array::c_style | py::array::forcecast>>();
    if (w.ndim() != 1 || w.shape(0) != n) throw std::invalid_argument("weights must be (n,)");
    auto wr = w.unchecked<1>();
    e.weights.resize(static_cast<size_t>(n));
    for (py::ssize_t i = 0; i < n; ++i) e.weights[static_cast<size_t>(i)] = wr(i);
  }
  e.wrap_positions();
  return e;
}

py::tuple ensemble_to_arrays(const ParticleEnsemble& e) {
  const auto n = static_cast<py::ssize_t>(e.size());
  py::array_t<double> x({n, static_cast<py::ssize_t>(e.dim)});
  py::array_t<double> v({n, static_cast<py::ssize_t>(e.dim)});
  py::array_t<double> w(n);
  auto xw = x.mutable_unchecked<2>();
  auto vw = v.mutable_unchecked<2>();
  auto ww = w.mutable_unchecked<1>();
  for (py::ssize_t i = 0; i < n; ++i) {
    for (py::ssize_t a = 0; a < e.dim; ++a) {
      xw(i, a) = e.positions[static_cast<size_t>(i)][static_cast<int>(a)];
      vw(i, a) = e.velocities[static_cast<size_t>(i)][static_cast<int>(a)];
    }
    ww(i) = e.weights[static_cast<size_t>(i)];
  }
  return py::make_tuple(x, v, w);
}

GriddedField field_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> values,
                              int dim, int cells, int components) {
  GriddedField f(make_grid(dim, cells), components);
  if (values.size() != static_cast<py::ssize_t>(f.values.size()))
    throw std::invalid_argument("value count must equal components * cells^dim");
  std::copy_n(values.data(), f.values.size(), f.values.data());
  return f;
}

py::array_t<double> field_to_array(const GriddedField& f) {
  py::array_t<double> out(static_cast<py::ssize_t>(f.values.size()));
  std::copy_n(f.values.data(), f.values.size(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_quasipic, m) {
  m.doc() = "scaled Vlasov-Poisson kinetics on the torus: solvers, transport distances, envelopes";
  m.attr("__version__") = QUASIPIC_VERSION;

  m.def("periodic_distance_points",
        [](std::vector<double> a, std::vector<double> b) {
          if (a.size() != b.size() || a.empty() || a.size() > 3)
            throw std::invalid_argument("points must share a dimension between 1 and 3");
          Vec x, y;
          for (size_t i = 0; i < a.size(); ++i) {
            x[static_cast<int>(i)] = a[i];
            y[static_cast<int>(i)] = b[i];
          }
          return periodic_distance(x, y, make_grid(static_cast<int>(a.size()), 4));
        },
        py::arg("a"), py::arg("b"), "geodesic distance on the unit torus");

  m.def("solve_potential",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> rho, int dim, int cells,
           double epsilon) {
          const PoissonSolution sol = solve_potential(field_from_array(rho, dim, cells, 1), epsilon);
          return py::make_tuple(field_to_array(sol.potential), field_to_array(sol.field),
                                sol.field_energy);
        },
        py::arg("rho"), py::arg("dim"), py::arg("cells"), py::arg("epsilon"),
        "spectral solve of the scaled Poisson equation; returns (potential, field, field_energy)");

  m.def("deposit",
        [](py::array_t<double> x, py::array_t<double> v, py::object w, int cells) {
          const ParticleEnsemble e = ensemble_from_arrays(std::move(x), std::move(v), std::move(w));
          return field_to_array(deposit(e, make_grid(e.dim, cells)));
        },
        py::arg("positions"), py::arg("velocities"), py::arg("weights"), py::arg("cells"));

  m.def("b_delta_norm",
        [](py::array_t<double> values, int dim, int cells, double delta) {
          return b_delta_norm(forward_transform(field_from_array(std::move(values), dim, cells, 1)),
                              delta);
        },
        py::arg("values"), py::arg("dim"), py::arg("cells"), py::arg("delta"));

  m.def("wasserstein",
        [](py::array_t<double> xa, py::array_t<double> va, py::object wa, py::array_t<double> xb,
           py::array_t<double> vb, py::object wb, int p, const std::string& method) {
          const ParticleEnsemble mu = ensemble_from_arrays(std::move(xa), std::move(va), std::move(wa));
          const ParticleEnsemble nu = ensemble_from_arrays(std::move(xb), std::move(vb), std::move(wb));
          if (method == "exact") return w_exact(mu, nu, p).distance;
          if (method == "sinkhorn") return w_sinkhorn(mu, nu, p).distance;
          throw std::invalid_argument("method must be exact or sinkhorn");
        },
        py::arg("xa"), py::arg("va"), py::arg("wa"), py::arg("xb"), py::arg("vb"), py::arg("wb"),
        py::arg("p") = 2, py::arg("method") = "exact");

  m.def("sample_ensemble",
        [](double delta, int mode, double vth, double vmax, int dim, int64_t n, uint64_t seed) {
          AnalyticDensity d;
          d.dim = dim;
          if (delta != 0.0) d.modes.push_back({{mode, 0, 0}, delta, 0.0});
          d.velocity.kind = VelocityProfile::Kind::TruncatedGaussian;
          d.velocity.vth = vth;
          d.velocity.radius = vmax;
          return ensemble_to_arrays(sample_ensemble(d, n, seed));
        },
        py::arg("delta"), py::arg("mode"), py::arg("vth"), py::arg("vmax"), py::arg("dim"),
        py::arg("n"), py::arg("seed"),
        "cosine-perturbed truncated-gaussian initial data as (x, v, w) arrays");

  m.def("save_ensemble",
        [](const std::string& path, py::array_t<double> x, py::array_t<double> v, py::object w) {
          save_ensemble(path, ensemble_from_arrays(std::move(x), std::move(v), std::move(w)));
        },
        py::arg("path"), py::arg("positions"), py::arg("velocities"), py::arg("weights") = py::none());
  m.def("load_ensemble",
        [](const std::string& path) { return ensemble_to_arrays(load_ensemble(path)); },
        py::arg("path"));

  // envelope and exponent algebra
  m.def("gronwall_rate", &gronwall_rate, py::arg("rho2_inf"), py::arg("rho_max_inf"),
        py::arg("rho1_dev_inf"), py::arg("epsilon"));
  m.def("log_modulus", &log_modulus, py::arg("z"), py::arg("d"));
  m.def("gronwall_closed_form", &gronwall_closed_form, py::arg("z"), py::arg("a_integral"),
        py::arg("c0"), py::arg("d"), py::arg("positive_exponent_variant") = false);
  m.def("envelope_squared_at", &envelope_squared_at, py::arg("z0_squared"), py::arg("a_integral"),
        py::arg("c0"), py::arg("d"));
  m.def("support_envelope_2d", &support_envelope_2d, py::arg("v0"), py::arg("t"), py::arg("epsilon"),
        py::arg("alpha"), py::arg("c_alpha"));
  m.def("support_envelope_3d", &support_envelope_3d, py::arg("v0_coeff"), py::arg("epsilon"),
        py::arg("gamma"), py::arg("horizon"), py::arg("c1"));
  m.def("batt_rein_exponent",
        [](long long num, long long den) {
          const Rational r = batt_rein_exponent(Rational(num, den));
          return py::make_tuple(r.num, r.den);
        },
        py::arg("num"), py::arg("den"));
  m.def("phi_threshold",
        [](double epsilon, int d, double gamma, double beta, double k) {
          const PerturbationThreshold t = phi_threshold(epsilon, d, gamma, beta, k);
          return py::make_tuple(t.value, t.exponent);
        },
        py::arg("epsilon"), py::arg("d"), py::arg("gamma"), py::arg("beta"), py::arg("k"));
  m.def("normalizing_constant", &normalizing_constant, py::arg("dim"), py::arg("rel_tol") = 1e-10);

  m.def("run_twin_config",
        [](const std::string& config_text) {
          const ExperimentConfig cfg = parse_config_text(config_text);
          const TwinReport rep = run_twin(cfg);
          py::dict out;
          out["phi_measured"] = rep.phi_measured;
          out["well_prepared"] = rep.well_prepared;
          out["sup_w2"] = rep.sup_w2();
          out["sup_w1_to_limit"] = rep.sup_w1_to_limit();
          out["all_ok"] = rep.all_ok();
          py::list t, w2, w1, env;
          for (const auto& s : rep.samples) {
            t.append(s.t);
            w2.append(s.w2_fg);
            w1.append(s.w1_to_limit);
            env.append(s.env_w2);
          }
          out["t"] = t;
          out["w2"] = w2;
          out["w1_to_limit"] = w1;
          out["env_w2"] = env;
          return out;
        },
        py::arg("config_text"), "run the twin experiment from configuration text");

  m.def("set_threads", &set_global_threads, py::arg("n"));
}
