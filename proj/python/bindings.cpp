#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mvgame/benchmarks.hpp"
#include "mvgame/config.hpp"
#include "mvgame/errors.hpp"
#include "mvgame/experiment.hpp"
#include "mvgame/game.hpp"
#include "mvgame/hamiltonian.hpp"
#include "mvgame/parallel.hpp"
#include "mvgame/wcalculus.hpp"

namespace py = pybind11;
using namespace mvgame;

namespace {

RandomVector root_vector(const EmpiricalMeasure& mu, std::vector<int> channels, int R) {
  return RandomVector::at_root(mu, std::move(channels), R);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Finite-state mean-field game engine";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
  py::register_exception<CapacityError>(m, "CapacityError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<ContractViolation>(m, "ContractViolation", base.ptr());
  py::register_exception<HorizonError>(m, "HorizonError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());

  m.attr("__version__") = kVersion;
  m.def("set_thread_count", &set_thread_count, py::arg("threads"));
  m.def("thread_count", &thread_count);

  py::class_<EmpiricalMeasure>(m, "EmpiricalMeasure")
      .def(py::init<std::size_t, std::vector<double>, std::vector<double>>(), py::arg("dim"),
           py::arg("points"), py::arg("weights"))
      .def_static("uniform", &EmpiricalMeasure::uniform, py::arg("dim"), py::arg("points"))
      .def_static("dirac", &EmpiricalMeasure::dirac, py::arg("point"))
      .def_property_readonly("dim", &EmpiricalMeasure::dim)
      .def("__len__", &EmpiricalMeasure::size)
      .def_property_readonly("points", &EmpiricalMeasure::points)
      .def_property_readonly("weights", &EmpiricalMeasure::weights)
      .def("mean", &EmpiricalMeasure::mean);

  m.def("wasserstein_q", &wasserstein_q, py::arg("mu"), py::arg("nu"), py::arg("q") = 2.0);

  py::enum_<Family>(m, "Family")
      .value("linear_mf", Family::kLinearMf)
      .value("lq_mf", Family::kLqMf)
      .value("bilinear_game", Family::kBilinearGame)
      .value("custom_table", Family::kCustomTable);

  py::class_<ProblemSpec>(m, "ProblemSpec")
      .def(py::init([](const std::string& family, std::size_t dim, std::map<std::string, double> params,
                       std::vector<double> actions_a, std::vector<double> actions_b, double horizon) {
             auto wrap = [](const std::vector<double>& v, const char* p) {
               std::vector<Action> out;
               for (std::size_t i = 0; i < v.size(); ++i) out.push_back({p + std::to_string(i), v[i]});
               return out;
             };
             return ProblemSpec(family_from_name(family), dim, std::move(params), wrap(actions_a, "a"),
                                wrap(actions_b, "b"), horizon);
           }),
           py::arg("family"), py::arg("state_dim"), py::arg("params"), py::arg("actions_a"),
           py::arg("actions_b"), py::arg("horizon"))
      .def_property_readonly("horizon", &ProblemSpec::horizon)
      .def_property_readonly("state_dim", &ProblemSpec::state_dim)
      .def_property_readonly("params", &ProblemSpec::params)
      .def_property_readonly("depends_on_state_law", &ProblemSpec::depends_on_state_law)
      .def_property_readonly("depends_on_control_law", &ProblemSpec::depends_on_control_law);

  py::enum_<NoiseMode>(m, "NoiseMode")
      .value("exact_rademacher", NoiseMode::kExactRademacher)
      .value("monte_carlo", NoiseMode::kMonteCarlo);

  py::class_<ScenarioTree>(m, "ScenarioTree")
      .def(py::init(&build_scenario_tree), py::arg("steps"), py::arg("start_time"), py::arg("horizon"),
           py::arg("mode") = NoiseMode::kExactRademacher, py::arg("channels") = 1, py::arg("noise_dim") = 1,
           py::arg("seed") = 0, py::arg("paths") = 1000, py::arg("leaf_cap") = std::uint64_t{1} << 20)
      .def_property_readonly("dt", &ScenarioTree::dt)
      .def_property_readonly("steps", &ScenarioTree::steps)
      .def_property_readonly("num_leaves", &ScenarioTree::num_leaves);

  py::class_<RandomVector>(m, "RandomVector")
      .def_static("at_root", &root_vector, py::arg("mu"), py::arg("channels") = std::vector<int>{},
                  py::arg("randomization_atoms") = 1)
      .def_readonly("level", &RandomVector::level)
      .def_readonly("positions", &RandomVector::positions)
      .def_readonly("weights", &RandomVector::weights)
      .def("__len__", &RandomVector::size)
      .def("law", &RandomVector::law);

  py::enum_<ValueSide>(m, "ValueSide").value("lower", ValueSide::kLower).value("upper", ValueSide::kUpper);

  m.def("lower_value",
        [](double t, const RandomVector& xi, const ProblemSpec& spec, const ScenarioTree& tree, std::uint64_t cap) {
          return lower_value(t, xi, spec, tree, cap, false).value;
        },
        py::arg("t"), py::arg("xi"), py::arg("spec"), py::arg("tree"), py::arg("cap") = kDefaultEnumerationCap);
  m.def("upper_value",
        [](double t, const RandomVector& xi, const ProblemSpec& spec, const ScenarioTree& tree, std::uint64_t cap) {
          return upper_value(t, xi, spec, tree, cap, false).value;
        },
        py::arg("t"), py::arg("xi"), py::arg("spec"), py::arg("tree"), py::arg("cap") = kDefaultEnumerationCap);
  m.def("strategy_enumeration_value", &strategy_enumeration_value, py::arg("t"), py::arg("xi"), py::arg("spec"),
        py::arg("tree"), py::arg("side"), py::arg("cap") = kDefaultStrategyCap);
  m.def("dpp_residual", &dpp_residual, py::arg("t"), py::arg("s"), py::arg("xi"), py::arg("spec"),
        py::arg("tree"), py::arg("cap") = kDefaultEnumerationCap);

  m.def("measure_hamiltonian",
        [](const EmpiricalMeasure& mu, const std::string& functional, const ProblemSpec& spec, ValueSide side,
           int R) {
          const PMFields f = fields_from_functional(functional_by_name(functional, mu.dim()), mu);
          return measure_hamiltonian(mu, f, spec, side, R);
        },
        py::arg("mu"), py::arg("functional"), py::arg("spec"), py::arg("side"), py::arg("randomization_atoms") = 1);
  m.def("lions_gradient",
        [](const std::string& functional, const EmpiricalMeasure& mu, double h) {
          return lions_gradient(functional_by_name(functional, mu.dim()), mu, h);
        },
        py::arg("functional"), py::arg("mu"), py::arg("h") = kDefaultFdStep);
  m.def("analytic_gradient",
        [](const std::string& functional, const EmpiricalMeasure& mu) {
          return analytic_gradient(functional_by_name(functional, mu.dim()), mu);
        },
        py::arg("functional"), py::arg("mu"));

  py::class_<LqParameters>(m, "LqParameters")
      .def(py::init<>())
      .def_readwrite("theta", &LqParameters::theta)
      .def_readwrite("theta_bar", &LqParameters::theta_bar)
      .def_readwrite("sigma", &LqParameters::sigma)
      .def_readwrite("kappa_v", &LqParameters::kappa_v)
      .def_readwrite("kappa_m", &LqParameters::kappa_m)
      .def_readwrite("rho", &LqParameters::rho)
      .def_readwrite("lambda_v", &LqParameters::lambda_v)
      .def_readwrite("lambda_m", &LqParameters::lambda_m)
      .def_readwrite("horizon", &LqParameters::horizon);
  m.def("lq_riccati_value", &lq_riccati_value, py::arg("params"), py::arg("t"), py::arg("mu"));
  m.def("classical_mdp_value", &classical_mdp_value, py::arg("spec"), py::arg("t"), py::arg("x"),
        py::arg("tree"), py::arg("channel") = 0, py::arg("cap") = kDefaultEnumerationCap);

  m.def("run_config",
        [](const std::string& text) {
          const ExperimentConfig config = parse_problem_config(text);
          const Report report = run_experiment(config);
          return py::make_tuple(report.passed(), report.to_json());
        },
        py::arg("text"), "Parse a JSON config, run it and return (passed, report_json).");
}
