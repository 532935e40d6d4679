#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "superwit/criteria.hpp"
#include "superwit/experiments.hpp"
#include "superwit/models.hpp"
#include "superwit/separable.hpp"
#include "superwit/state_io.hpp"

namespace py = pybind11;
using namespace superwit;
namespace cr = superwit::criteria;
namespace ex = superwit::experiments;
namespace sep = superwit::separable;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

SpaceDescriptor make_space(const std::string& type, int n, int n_max) {
  const auto t = space_type_from_string(type);
  if (!t) throw std::invalid_argument("unknown space type '" + type + "'");
  return {*t, n, n_max};
}

cr::WitnessConfig witness_config(bool phased, bool mean_constrained, int starts, double tol) {
  cr::WitnessConfig w;
  w.phased = phased;
  w.mean_constrained_eta = mean_constrained;
  w.eta.starts = starts;
  w.detection_tolerance = tol;
  return w;
}

// Experiment config from keyword arguments; unknown keys are an error.
ex::ExperimentConfig experiment_config(const std::string& name, const py::kwargs& kw) {
  ex::ExperimentConfig c;
  c.experiment = name;
  if (name == "fig6") c.n_particles = 200;
  auto grid = [](const py::handle& h) {
    const auto t = h.cast<std::tuple<double, double, int>>();
    return ex::Grid{std::get<0>(t), std::get<1>(t), std::get<2>(t)};
  };
  for (const auto& [k, v] : kw) {
    const auto key = k.cast<std::string>();
    if (key == "n_particles") c.n_particles = v.cast<int>();
    else if (key == "seed") c.seed = v.cast<std::uint64_t>();
    else if (key == "tolerance") c.tolerance = v.cast<double>();
    else if (key == "threads") c.threads = v.cast<int>();
    else if (key == "phased") c.phased = v.cast<bool>();
    else if (key == "lamb_shift") c.lamb_shift = v.cast<bool>();
    else if (key == "eta_starts") c.eta_starts = v.cast<int>();
    else if (key == "g_grid") c.g_grid = grid(v);
    else if (key == "u_grid") c.u_grid = grid(v);
    else if (key == "t_grid") c.t_grid = grid(v);
    else if (key == "radius") c.radius = v.cast<double>();
    else if (key == "coincident") c.coincident = v.cast<bool>();
    else if (key == "count") c.count = v.cast<int>();
    else if (key == "out_dir") c.out_dir = v.cast<std::string>();
    else throw py::key_error("unknown experiment option '" + key + "'");
  }
  return c;
}

py::dict table_dict(const ex::Table& t) {
  py::dict d;
  for (std::size_t i = 0; i < t.columns.size(); ++i) d[py::str(t.columns[i].name)] = py::cast(t.values(t.columns[i].name));
  d["flag"] = py::cast(t.flags);
  return d;
}

}  // namespace

PYBIND11_MODULE(_superwit, m) {
  m.doc() = "Collective-spin entanglement witnesses";
  m.attr("__version__") = ex::version();

  py::class_<CollectiveState>(m, "State")
      .def_static(
          "pure",
          [](const std::string& type, int n, const CVector& amps, int n_max, bool normalize) {
            return CollectiveState::pure(make_space(type, n, n_max), amps, normalize);
          },
          py::arg("space"), py::arg("n_particles"), py::arg("amplitudes"), py::arg("n_max") = -1,
          py::arg("normalize") = false)
      .def_static(
          "density",
          [](const std::string& type, int n, const CMatrix& rho, int n_max) {
            return CollectiveState::density(make_space(type, n, n_max), rho);
          },
          py::arg("space"), py::arg("n_particles"), py::arg("rho"), py::arg("n_max") = -1)
      .def_static("from_json", [](const std::string& text) { return parse_state(text); })
      .def("to_json", [](const CollectiveState& s) { return state_to_json(s).dump(); })
      .def_property_readonly("space", [](const CollectiveState& s) { return to_string(s.space().type); })
      .def_property_readonly("n_particles", [](const CollectiveState& s) { return s.space().n_particles; })
      .def_property_readonly("n_max", [](const CollectiveState& s) { return s.space().n_max; })
      .def_property_readonly("dim", &CollectiveState::dim)
      .def_property_readonly("is_pure", &CollectiveState::is_pure)
      .def_property_readonly("vector", [](const CollectiveState& s) { return s.vector(); })
      .def("density_matrix", &CollectiveState::density_matrix)
      .def("reduced_spin", &CollectiveState::reduced_spin)
      .def("reduced_field", &CollectiveState::reduced_field)
      .def("__repr__", [](const CollectiveState& s) {
        return "<State " + to_string(s.space().type) + " N=" + std::to_string(s.space().n_particles) +
               " dim=" + std::to_string(s.dim()) + ">";
      });

  m.def("dicke_state", &dicke_state, py::arg("n_particles"), py::arg("m"));
  m.def(
      "random_state",
      [](const std::string& kind, int n, std::uint64_t seed, bool allow_large) {
        return random_state(kind == "full" ? RandomStateKind::full : RandomStateKind::symmetric, n, seed, allow_large);
      },
      py::arg("kind"), py::arg("n_particles"), py::arg("seed"), py::arg("allow_large") = false);
  m.def("load_state", [](const std::string& path) { return load_state(path); });
  m.def("save_state", [](const CollectiveState& s, const std::string& path) { save_state(s, path); });

  m.def("spin_moments", [](const CollectiveState& s) {
    const auto mo = spin_moments(s);
    py::dict d;
    d["expR"] = mo.expR;
    d["expR2"] = mo.expR2;
    d["expSz"] = mo.expSz;
    d["varR"] = mo.varR();
    return d;
  });

  // Witnesses return their JSON reports as dicts.
  m.def(
      "xi_new",
      [](const CollectiveState& s, bool phased, bool mean_constrained, int starts, double tol) {
        return to_py(cr::xi_new(s, witness_config(phased, mean_constrained, starts, tol)).to_json());
      },
      py::arg("state"), py::arg("phased") = false, py::arg("mean_constrained") = false, py::arg("starts") = 32,
      py::arg("tolerance") = 1e-6);
  m.def("xi_spin", [](const CollectiveState& s) { return to_py(cr::xi_spin(s).to_json()); });
  m.def("linear_entropy_Q", &cr::linear_entropy_Q);
  m.def("mu_SR", [](const CollectiveState& s) { return to_py(cr::mu_SR(s).to_json()); });
  m.def("mu_HZ", [](const CollectiveState& s) { return to_py(cr::mu_HZ(s).to_json()); });
  m.def("mu_spin", [](const CollectiveState& s) { return to_py(cr::mu_spin(s).to_json()); });
  m.def(
      "single_mode_witness",
      [](const CollectiveState& s, const std::string& variant, int theta_scan) {
        const auto v = cr::single_mode_variant_from_string(variant);
        if (!v) throw std::invalid_argument("variant must be 'central_moment' or 'as_printed'");
        return to_py(cr::single_mode_witness(s, *v, theta_scan).to_json());
      },
      py::arg("state"), py::arg("variant") = "central_moment", py::arg("theta_scan") = 180);
  m.def("mandel_q_field", &cr::mandel_q_field);
  m.def(
      "gn",
      [](const CollectiveState& s, int order, const std::string& modes) {
        cr::ModePair mp;
        if (modes == "standing_wave") mp.kind = cr::ModeKind::standing_wave;
        else if (modes != "plane_wave") throw std::invalid_argument("modes must be 'plane_wave' or 'standing_wave'");
        return cr::gn_wavefunction(s, mp, order);
      },
      py::arg("state"), py::arg("order") = 2, py::arg("modes") = "plane_wave");

  m.def(
      "eta_lower_bound",
      [](int n, double r, double s, bool phased, bool mean_constrained, int starts, std::uint64_t seed) {
        sep::EtaQuery q{n, r, s};
        q.phased = phased;
        q.mean_constrained = mean_constrained;
        sep::OptimizerConfig cfg;
        cfg.starts = starts;
        cfg.seed = seed;
        const auto res = sep::eta_lower_bound(q, cfg);
        return py::make_tuple(res.eta, to_py(res.diagnostics.to_json()));
      },
      py::arg("n_particles"), py::arg("expR"), py::arg("expSz"), py::arg("phased") = false,
      py::arg("mean_constrained") = false, py::arg("starts") = 32, py::arg("seed") = 20170311);
  m.def(
      "product_moments",
      [](std::vector<double> theta, std::vector<double> phi, std::vector<double> phase) {
        const auto mo = sep::product_moments({std::move(theta), std::move(phi), std::move(phase)});
        return py::make_tuple(mo.expR, mo.expR2, mo.expSz);
      },
      py::arg("theta"), py::arg("phi"), py::arg("phase") = std::vector<double>{});

  m.def(
      "dicke_ground_state",
      [](int n, double g, double omega_eg, double omega_a) {
        models::DickeParams p;
        p.n_particles = n;
        p.g = g;
        p.omega_eg = omega_eg;
        p.omega_a = omega_a;
        const auto gs = models::dicke_ground_state(p);
        py::dict info;
        info["energy"] = gs.energy;
        info["n_per_N"] = gs.n_per_N;
        info["expSz"] = gs.expSz;
        info["n_max"] = gs.n_max;
        info["fock_tail"] = gs.fock_tail;
        info["method"] = gs.method;
        return py::make_tuple(gs.state, info);
      },
      py::arg("n_particles"), py::arg("g"), py::arg("omega_eg") = 1.0, py::arg("omega_a") = 1.0);
  m.def(
      "bec_ground_state",
      [](int n, double omega_exc, double u_int) {
        const auto b = models::bec_ground_state({n, omega_exc, u_int});
        return py::make_tuple(b.state, b.m_star, b.tie);
      },
      py::arg("n_particles"), py::arg("omega_exc"), py::arg("u_int"));

  m.def("experiment_names", &ex::experiment_names);
  m.def(
      "run_experiment",
      [](const std::string& name, bool write, const py::kwargs& kw) {
        const auto cfg = experiment_config(name, kw);
        ex::ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = ex::run(cfg);
        }
        py::dict out;
        out["name"] = r.name;
        out["table"] = table_dict(r.table);
        out["summary"] = to_py(r.summary);
        out["config_hash"] = cfg.hash();
        for (const auto& [suffix, t] : r.extra) out[py::str("table" + suffix)] = table_dict(t);
        if (write) out["files"] = py::cast(ex::write_outputs(r, cfg));
        return out;
      },
      py::arg("name"), py::kw_only(), py::arg("write") = false);
}
