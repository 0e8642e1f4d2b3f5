#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "robcal/cli.hpp"
#include "robcal/error.hpp"
#include "robcal/estimator.hpp"
#include "robcal/io.hpp"
#include "robcal/simulator.hpp"

namespace py = pybind11;
using namespace robcal;

namespace {

std::vector<GeometricParameter> parse_names(const std::vector<std::string>& names) {
  std::vector<GeometricParameter> out;
  for (const auto& n : names) out.push_back(parse_parameter(n));
  return out;
}

StackedSystem make_system(Eigen::MatrixXd B, Eigen::VectorXd dp, Eigen::VectorXd sigma,
                          std::vector<std::string> names) {
  StackedSystem s;
  s.B = std::move(B);
  s.dp = std::move(dp);
  s.sigma = std::move(sigma);
  if (names.empty())
    for (Eigen::Index j = 0; j < s.B.cols(); ++j) names.push_back("x" + std::to_string(j + 1));
  s.param_names = std::move(names);
  for (Eigen::Index i = 0; i < s.B.rows(); ++i) {
    s.row_tags.push_back({1, 0, static_cast<int>(i / 3), static_cast<int>(i % 3)});
  }
  s.validate();
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Weighted least-squares calibration of serial manipulators";

  static py::exception<Error> robcal_error(m, "RobcalError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(robcal_error, (std::string(code_name(e.code())) + ": " + e.what()).c_str());
    }
  });

  py::class_<ManipulatorModel>(m, "Model")
      .def_static("study", &study_model, "Bundled six-axis study robot")
      .def_static(
          "from_text",
          [](const std::string& text) {
            std::istringstream in(text);
            return io::parse_model(in).model;
          },
          py::arg("text"))
      .def_static(
          "from_file", [](const std::string& path) { return io::read_model(path).model; },
          py::arg("path"))
      .def_property_readonly("n_joints", &ManipulatorModel::n_joints)
      .def_property_readonly("n_markers", &ManipulatorModel::n_markers)
      .def(
          "forward_kinematics",
          [](const ManipulatorModel& self, const JointVector& q, int marker) {
            const Pose p = forward_kinematics(self, q, marker);
            return py::make_tuple(p.position, p.orientation);
          },
          py::arg("q"), py::arg("marker") = 0, "(position, rotation) of a marker, m and rad")
      .def(
          "joint_jacobian",
          [](const ManipulatorModel& self, const JointVector& q, int marker) {
            return Eigen::MatrixXd(joint_jacobian(self, q, marker));
          },
          py::arg("q"), py::arg("marker") = 0)
      .def(
          "parameter_jacobian",
          [](const ManipulatorModel& self, const JointVector& q, int marker,
             const std::vector<std::string>& names) {
            return Eigen::MatrixXd(parameter_jacobian(self, q, marker, parse_names(names)));
          },
          py::arg("q"), py::arg("marker"), py::arg("parameters"))
      .def("parameter_names", [](const ManipulatorModel& self) {
        std::vector<std::string> out;
        for (const auto& p : all_parameters(self)) out.push_back(p.name());
        return out;
      });

  py::class_<StackedSystem>(m, "System")
      .def(py::init(&make_system), py::arg("B"), py::arg("dp"), py::arg("sigma"),
           py::arg("names") = std::vector<std::string>{},
           "Rows are grouped in xyz triples of one configuration")
      .def_readonly("B", &StackedSystem::B)
      .def_readonly("dp", &StackedSystem::dp)
      .def_readonly("sigma", &StackedSystem::sigma)
      .def_readonly("param_names", &StackedSystem::param_names)
      .def_property_readonly("rows", &StackedSystem::rows)
      .def_property_readonly("cols", &StackedSystem::cols);

  py::class_<EstimationResult>(m, "Result")
      .def_property_readonly("method",
                             [](const EstimationResult& r) { return std::string(method_name(r.method)); })
      .def_readonly("param_names", &EstimationResult::param_names)
      .def_readonly("x_hat", &EstimationResult::x_hat)
      .def_readonly("covariance", &EstimationResult::covariance)
      .def_readonly("ci3", &EstimationResult::ci3)
      .def_readonly("residuals", &EstimationResult::residuals)
      .def_readonly("weights", &EstimationResult::weights)
      .def_readonly("warnings", &EstimationResult::warnings)
      .def_readonly("converged", &EstimationResult::converged)
      .def_readonly("diverged", &EstimationResult::diverged)
      .def_property_readonly("trace", [](const EstimationResult& r) {
        py::list out;
        for (const auto& it : r.iterations) out.append(py::make_tuple(it.x_hat, it.ci3, it.max_rel_change));
        return out;
      });

  m.def(
      "study_system",
      [](std::uint64_t seed, int markers, int repetitions, bool noise) {
        StudyDesign d = default_study_design();
        d.seed = seed;
        d.markers = markers;
        d.repetitions = repetitions;
        const NoiseModel table = d.noise;
        if (!noise)
          for (auto& [id, s] : d.noise.sigma) s.setZero();
        const auto model = study_model();
        const StackedSystem sys = stack_system(simulate_measurements(d, model), model, d.layout(), table);
        return py::make_tuple(sys, d.truth());
      },
      py::arg("seed") = 1, py::arg("markers") = 3, py::arg("repetitions") = 6, py::arg("noise") = true,
      "Simulated study system and its ground truth (SI units)");

  m.def("ols", &ols_estimate, py::arg("system"));
  m.def(
      "wls",
      [](const StackedSystem& s, const Eigen::VectorXd& w) { return wls_estimate(s, {w}); },
      py::arg("system"), py::arg("weights"));
  m.def(
      "irls",
      [](const StackedSystem& s, double sigma0, double lambda, int max_iter, double rel_tol,
         bool own) { return irls(s, {sigma0, lambda, max_iter, rel_tol, own}); },
      py::arg("system"), py::arg("sigma0") = kDefaultSigmaFloor, py::arg("lambda_") = 1.0,
      py::arg("max_iter") = 20, py::arg("rel_tol") = 1e-3,
      py::arg("covariance_from_own_residuals") = false);
  m.def(
      "optimal_weights",
      [](const Eigen::VectorXd& sigma, double a) { return optimal_weights(sigma, a).w; },
      py::arg("sigma"), py::arg("a") = 1.0);
  m.def(
      "robust_weights",
      [](const Eigen::VectorXd& sigma, double sigma0, double lambda) {
        return robust_weights(sigma, sigma0, lambda).w;
      },
      py::arg("sigma"), py::arg("sigma0") = kDefaultSigmaFloor, py::arg("lambda_") = 1.0);
  m.def("iid_covariance", &iid_covariance, py::arg("B"), py::arg("sigma"));
  m.def("sandwich_covariance", &sandwich_covariance, py::arg("B"), py::arg("sigma"));
  m.def("weighted_sandwich_covariance", &weighted_sandwich_covariance, py::arg("B"), py::arg("w"),
        py::arg("sigma"));
  m.def("reduced_covariance", &reduced_covariance, py::arg("B"), py::arg("sigma"));

  m.def(
      "run",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Command line entry point: (exit code, stdout, stderr)");
}
