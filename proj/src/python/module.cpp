#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "condenser/cli.hpp"
#include "condenser/experiments.hpp"
#include "condenser/verify.hpp"

namespace py = pybind11;
using namespace condenser;

namespace {

// Reports cross the boundary as plain dicts through their JSON form.
py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

struct PyProblem {
  RunConfig config;
  std::shared_ptr<const Problem> problem;
};

struct PySolution {
  std::shared_ptr<const Problem> problem;
  Solution solution;
};

PyProblem make_problem(RunConfig cfg) {
  PyProblem p;
  p.problem = std::make_shared<const Problem>(build_problem(build_inputs(cfg)));
  p.config = std::move(cfg);
  return p;
}

}  // namespace

PYBIND11_MODULE(_condenser, m) {
  m.doc() = "Constrained condenser energy problems for Riesz and Green kernels";

  py::register_exception<Error>(m, "CondenserError", PyExc_RuntimeError);

  m.def("config_hash", &config_hash, py::arg("text"));
  m.def("versions", [] { return to_py(cli::versions()); });

  py::class_<PyProblem>(m, "Problem")
      .def_static("from_file", [](const std::filesystem::path& path) { return make_problem(load_config(path)); },
                  py::arg("path"))
      .def_static(
          "from_toml",
          [](const std::string& text, const std::filesystem::path& base_dir, std::optional<std::uint64_t> seed) {
            RunConfig cfg = parse_config(text, base_dir);
            if (seed) cfg.seed = *seed;
            return make_problem(std::move(cfg));
          },
          py::arg("text"), py::arg("base_dir") = ".", py::arg("seed") = py::none())
      .def_property_readonly("points", [](const PyProblem& p) { return Eigen::MatrixXd(p.problem->cloud->points); })
      .def_property_readonly("cell_radius", [](const PyProblem& p) { return p.problem->cloud->cell_radius; })
      .def_property_readonly("a1_rows", [](const PyProblem& p) { return p.problem->a1_rows; })
      .def_property_readonly("a2_rows", [](const PyProblem& p) { return p.problem->a2_rows; })
      .def_property_readonly("xi", [](const PyProblem& p) { return p.problem->xi.xi.weights; })
      .def_property_readonly("alpha", [](const PyProblem& p) { return p.problem->domain.alpha; })
      .def_property_readonly("seed", [](const PyProblem& p) { return p.config.seed; })
      .def(
          "solve",
          [](const PyProblem& p, const std::string& method) {
            if (method != "bridge" && method != "direct")
              throw Error(ErrorCode::ConfigError, "method must be bridge or direct");
            PySolution s;
            s.problem = p.problem;
            py::gil_scoped_release release;
            s.solution = method == "direct" ? solve_riesz_direct(*p.problem) : solve_riesz_via_bridge(*p.problem);
            return s;
          },
          py::arg("method") = "bridge")
      .def("balayage_check", [](const PyProblem& p, int trials, std::uint64_t seed) {
             return to_py(balayage_check(*p.problem, trials, seed));
           },
           py::arg("trials") = 10, py::arg("seed") = 7);

  py::class_<PySolution>(m, "Solution")
      .def_property_readonly("weight_plus", [](const PySolution& s) { return s.solution.lambda.plus.weights; })
      .def_property_readonly("weight_minus", [](const PySolution& s) { return s.solution.lambda.minus.weights; })
      .def_property_readonly("potential",
                             [](const PySolution& s) { return Eigen::VectorXd(s.problem->riesz->values * s.solution.lambda.net()); })
      .def_property_readonly("objective_riesz", [](const PySolution& s) { return s.solution.objective_riesz; })
      .def_property_readonly("objective_green", [](const PySolution& s) { return s.solution.objective_green; })
      .def_property_readonly("bridge_gap", [](const PySolution& s) { return s.solution.bridge_gap; })
      .def_property_readonly("multiplier_c", [](const PySolution& s) { return s.solution.multiplier_c; })
      .def_property_readonly("method", [](const PySolution& s) { return s.solution.method; })
      .def("frostman", [](const PySolution& s, double threshold) {
             return to_py(frostman_diagnostics(s.solution, *s.problem, threshold));
           },
           py::arg("threshold") = 0.02)
      .def("perturbed_frostman", [](const PySolution& s, double fraction) {
             return to_py(frostman_diagnostics(perturb_solution(s.solution, *s.problem, fraction), *s.problem));
           },
           py::arg("fraction") = 0.05)
      .def("zone", [](const PySolution& s, int probes) {
             ZoneOptions o;
             o.probes = probes;
             return to_py(zone_diagnostics(s.solution, *s.problem, o));
           },
           py::arg("probes") = 1000)
      .def("support", [](const PySolution& s) { return to_py(support_diagnostics(s.solution, *s.problem)); })
      .def("duality", [](const PySolution& s) { return to_py(duality_check(*s.problem, s.solution)); });

  m.def("disc_capacity", [](double radius, int nodes, double alpha, double beta) {
          return disc_capacity(radius, nodes, alpha, DiagonalRule{beta});
        },
        py::arg("radius") = 1.0, py::arg("nodes") = 2000, py::arg("alpha") = 2.0, py::arg("beta") = 0.54);
  m.def("ball_capacity", [](double radius, int nodes, double alpha, double beta) {
          return ball_capacity(radius, nodes, alpha, DiagonalRule{beta});
        },
        py::arg("radius") = 1.0, py::arg("nodes") = 1000, py::arg("alpha") = 1.5, py::arg("beta") = 0.54);
  m.def("calibrate_beta", [](double target, int nodes) {
          BetaCalibration b = calibrate_beta(target, nodes);
          return py::dict(py::arg("beta") = b.beta, py::arg("capacity") = b.capacity, py::arg("target") = b.target,
                          py::arg("evaluations") = b.evaluations);
        },
        py::arg("target"), py::arg("nodes") = 2000);

  m.def("counterexample", [](int terms, int nodes_per_disc) {
          CounterexampleOptions o;
          o.terms = terms;
          o.nodes_per_disc = nodes_per_disc;
          return to_py(counterexample_experiment(o));
        },
        py::arg("terms") = 8, py::arg("nodes_per_disc") = 200);
  m.def("unbounded_constraint", [](int discs, int nodes_per_disc) {
          UnboundedConstraintOptions o;
          o.discs = discs;
          o.nodes_per_disc = nodes_per_disc;
          return to_py(unbounded_constraint_experiment(o));
        },
        py::arg("discs") = 5, py::arg("nodes_per_disc") = 150);
  m.def("short_circuit", [](int levels, int base_nodes, int a2_nodes) {
          ShortCircuitOptions o;
          o.levels = levels;
          o.base_nodes = base_nodes;
          o.a2_nodes = a2_nodes;
          return to_py(short_circuit_experiment(o));
        },
        py::arg("levels") = 6, py::arg("base_nodes") = 120, py::arg("a2_nodes") = 6000);
}
