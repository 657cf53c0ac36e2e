#include <fstream>
#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "condot/cli.hpp"
#include "condot/context.hpp"
#include "condot/gaussian_ot.hpp"
#include "condot/ot_metrics.hpp"
#include "condot/training.hpp"

namespace py = pybind11;
using namespace condot;

namespace {

Context to_context(const py::handle& h) {
  if (py::isinstance<py::str>(h)) return Context::categorical(h.cast<std::string>());
  if (py::isinstance<py::float_>(h) || py::isinstance<py::int_>(h)) return Context::scalar(h.cast<double>());
  if (py::isinstance<py::sequence>(h)) return Context::action_set(h.cast<std::vector<std::string>>());
  throw py::type_error("context must be a number, a label or a sequence of labels");
}

TrainState load_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return checkpoint_from_json(nlohmann::json::parse(os.str()));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Conditional Monge maps: Gaussian maps, OT metrics and trained models";
  py::register_exception<Error>(m, "CondotError", PyExc_ValueError);

  py::class_<AffineMongeMap>(m, "AffineMongeMap")
      .def_readonly("A", &AffineMongeMap::A)
      .def_readonly("b", &AffineMongeMap::b)
      .def_readonly("omega", &AffineMongeMap::omega)
      .def_readonly("t", &AffineMongeMap::t)
      .def("apply", &AffineMongeMap::apply, py::arg("x"))
      .def("potential", [](const AffineMongeMap& T, const Vector& x) { return brenier_potential(T, x); },
           py::arg("x"));

  m.def(
      "gaussian_monge_map",
      [](const Vector& m1, const Matrix& s1, const Vector& m2, const Matrix& s2) {
        return gaussian_monge_map({m1, s1}, {m2, s2});
      },
      py::arg("mean_src"), py::arg("cov_src"), py::arg("mean_dst"), py::arg("cov_dst"));
  m.def(
      "gelbrich_distance",
      [](const Vector& m1, const Matrix& s1, const Vector& m2, const Matrix& s2) {
        return gelbrich_distance({m1, s1}, {m2, s2});
      },
      py::arg("mean_a"), py::arg("cov_a"), py::arg("mean_b"), py::arg("cov_b"));

  m.def(
      "sinkhorn",
      [](const Matrix& X, const Matrix& Y, double eps, int max_iters, double tol) {
        SinkhornOptions o;
        o.eps = eps;
        o.max_iters = max_iters;
        o.tol = tol;
        const CouplingResult r = sinkhorn(X, Y, o);
        py::dict d;
        d["cost"] = r.cost;
        d["plan"] = r.P;
        d["iterations"] = r.iterations;
        d["marginal_err"] = r.marginal_err;
        d["converged"] = r.converged;
        return d;
      },
      py::arg("X"), py::arg("Y"), py::arg("eps") = 0.1, py::arg("max_iters") = 5000, py::arg("tol") = 1e-6);
  m.def("exact_ot_cost", [](const Matrix& X, const Matrix& Y) { return exact_ot_oracle(X, Y).cost; },
        py::arg("X"), py::arg("Y"));
  m.def("mmd", py::overload_cast<const Matrix&, const Matrix&>(&mmd), py::arg("X"), py::arg("Y"));
  m.def("perturbation_signature_l2", &perturbation_signature_l2, py::arg("source"), py::arg("target"),
        py::arg("predicted"));

  m.def(
      "smacof",
      [](const Matrix& D, Eigen::Index dim, std::uint64_t seed) {
        const SmacofResult r = smacof(D, dim, seed);
        return py::make_tuple(r.X, r.stress);
      },
      py::arg("D"), py::arg("dim") = 2, py::arg("seed") = 0);

  py::class_<TrainState>(m, "Model")
      .def_static("load", &load_state, py::arg("checkpoint"), "Loads a checkpoint.json written by `condot train`.")
      .def_property_readonly("step", [](const TrainState& s) { return s.step; })
      .def_property_readonly("input_dim", [](const TrainState& s) { return s.g.spec.input_dim; })
      .def(
          "predict",
          [](const TrainState& s, const Matrix& X, const py::object& context) {
            return predict(s, X, to_context(context));
          },
          py::arg("X"), py::arg("context"));

  m.def(
      "cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "condot");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a condot command; returns (exit_code, stdout, stderr).");
}
