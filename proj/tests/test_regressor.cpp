#include <doctest.h>

#include <algorithm>
#include <random>

#include "robcal/error.hpp"
#include "robcal/regressor.hpp"
#include "robcal/simulator.hpp"
#include "support.hpp"

using namespace robcal;

namespace {

ManipulatorModel one_link() {
  ManipulatorModel m;
  m.joints.push_back(DhJoint{});
  m.tool.translation() = Eigen::Vector3d(1.0, 0.0, 0.0);
  m.markers.emplace_back(Eigen::Vector3d::Zero());
  return m;
}

ComplianceParameterMap all_tail(int n) {
  ComplianceParameterMap c;
  c.bucketed_joint.reset();
  for (int j = 0; j < n; ++j) c.tail_joints.push_back(j);
  return c;
}

/// Deflection of a marker under small joint rotations k_j * tau_j, by
/// differencing forward kinematics.
Eigen::Vector3d oracle_deflection(const ManipulatorModel& m, const JointVector& q,
                                  const Wrench& w, int marker, const Eigen::VectorXd& k) {
  const JointJacobian ja = joint_jacobian(m, q, w.application_marker);
  const Eigen::VectorXd tau = ja.transpose() * w.vector();
  const double h = 1e-6;
  Eigen::Vector3d out = Eigen::Vector3d::Zero();
  for (int j = 0; j < m.n_joints(); ++j) {
    JointVector qp = q, qm = q;
    qp[j] += h;
    qm[j] -= h;
    const Eigen::Vector3d dpdq =
        (forward_kinematics(m, qp, marker).position - forward_kinematics(m, qm, marker).position) /
        (2 * h);
    out += k[j] * tau[j] * dpdq;
  }
  return out;
}

}  // namespace

TEST_SUITE("regressor") {

TEST_CASE("one joint compliance column") {
  const auto m = one_link();
  Wrench w;
  w.force = Eigen::Vector3d(0, 10, 0);
  const Eigen::Matrix3Xd a = elastostatic_regressor(m, JointVector::Zero(1), w, all_tail(1), 0);
  REQUIRE(a.cols() == 1);
  CHECK((a.col(0) - Eigen::Vector3d(0, 10, 0)).norm() < 1e-12);
  const Eigen::Matrix3Xd z = elastostatic_regressor(m, JointVector::Zero(1), Wrench{}, all_tail(1), 0);
  CHECK(z.norm() == 0.0);
}

TEST_CASE("columns match a term by term deflection oracle") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    ManipulatorModel m = test::random_model(rng);
    for (auto& j : m.joints) j.type = JointType::Revolute;
    const auto q = test::random_q(rng, m.n_joints());
    Wrench w;
    w.force = Eigen::Vector3d(3, -7, 11);
    w.torque = Eigen::Vector3d(-2, 1, 0.5);
    w.application_marker = 0;
    const auto cmap = all_tail(m.n_joints());
    Eigen::VectorXd k = Eigen::VectorXd::Random(m.n_joints()).cwiseAbs();
    for (int marker = 0; marker < m.n_markers(); ++marker) {
      const Eigen::Vector3d lin = elastostatic_regressor(m, q, w, cmap, marker) * k;
      CHECK(test::rel_err(lin, oracle_deflection(m, q, w, marker, k)) < 1e-6);
    }
  }
}

TEST_CASE("bucketed joint uses one column per level") {
  const auto model = study_model();
  const auto design = default_study_design();
  const auto cmap = ComplianceParameterMap::from_configurations(design.configurations);
  CHECK(cmap.n_params() == 9);
  CHECK(cmap.names() == std::vector<std::string>{"k2_1", "k2_2", "k2_3", "k2_4", "k2_5", "k3",
                                                 "k4", "k5", "k6"});
  const JointVector& q = design.configurations[4];
  const int level = cmap.bucket_of(q[1]);
  CHECK(level == 1);
  const Wrench w = gravity_wrench(265.0, 0);
  const Eigen::Matrix3Xd a = elastostatic_regressor(model, q, w, cmap, 1);
  for (int c = 0; c < 5; ++c) {
    if (c == level) CHECK(a.col(c).norm() > 0.0);
    else CHECK(a.col(c).norm() == 0.0);
  }
  CHECK_THROWS_AS(cmap.bucket_of(q[1] + 1e-3), Error);
  try {
    cmap.bucket_of(0.5);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BucketMismatch);
  }
}

TEST_CASE("geometric regressor delegates") {
  std::mt19937_64 rng(2);
  const auto m = test::random_model(rng);
  const auto q = test::random_q(rng, m.n_joints());
  const auto sel = all_parameters(m);
  CHECK(geometric_regressor(m, q, 0, sel) == parameter_jacobian(m, q, 0, sel));
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sel.size()));
  CHECK((geometric_regressor(m, q, 0, sel) * zero).norm() == 0.0);
}

TEST_CASE("stacking the study gives 810 rows") {
  const auto model = study_model();
  const auto design = default_study_design();
  const auto records = simulate_measurements(design, model);
  CHECK(records.size() == 270);
  const StackedSystem sys = stack_system(records, model, design.layout(), design.noise);
  CHECK(sys.rows() == 810);
  CHECK(sys.cols() == 9);
  CHECK(sys.row_tags.size() == 810);
  CHECK(sys.param_names.size() == 9);
}

TEST_CASE("single record stack") {
  const auto m = one_link();
  ExperimentRecord r;
  r.config = 3;
  r.q = JointVector::Zero(1);
  r.wrench.force = Eigen::Vector3d(0, 10, 0);
  r.p0 = Eigen::Vector3d(1, 0, 0);
  r.p = Eigen::Vector3d(1, 1e-5, 0);
  ParameterLayout layout;
  layout.compliance = all_tail(1);
  const std::vector<int> ids = {3};
  const std::vector<ExperimentRecord> recs = {r};
  const StackedSystem sys = stack_system(recs, m, layout, NoiseModel::uniform(ids, 20e-6));
  REQUIRE(sys.rows() == 3);
  for (int a = 0; a < 3; ++a) {
    CHECK(sys.row_tags[static_cast<std::size_t>(a)] == RowTag{3, 0, 0, a});
  }
  CHECK(sys.dp[1] == doctest::Approx(1e-5));
  CHECK(sys.sigma[0] == 20e-6);
}

TEST_CASE("input order does not change the stacked system") {
  const auto model = study_model();
  auto design = default_study_design();
  design.seed = 4;
  auto records = simulate_measurements(design, model);
  const StackedSystem a = stack_system(records, model, design.layout(), design.noise);
  std::mt19937_64 rng(8);
  std::shuffle(records.begin(), records.end(), rng);
  const StackedSystem b = stack_system(records, model, design.layout(), design.noise);
  CHECK(a.B == b.B);
  CHECK(a.dp == b.dp);
  CHECK(a.row_tags == b.row_tags);
}

TEST_CASE("stacking errors") {
  const auto m = one_link();
  ExperimentRecord r;
  r.config = 1;
  r.q = JointVector::Zero(1);
  r.wrench.force = Eigen::Vector3d(0, 10, 0);
  ParameterLayout layout;
  layout.mode = IdentificationMode::Combined;
  layout.compliance = all_tail(1);
  layout.geometric = {parse_parameter("a1"), parse_parameter("d1"), parse_parameter("tool_x")};
  const std::vector<int> ids = {1};
  const std::vector<ExperimentRecord> recs = {r};
  try {
    stack_system(recs, m, layout, NoiseModel::uniform(ids, 1e-5));
    FAIL("expected underdetermined");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Underdetermined);
  }
  layout.mode = IdentificationMode::Elastostatic;
  const std::vector<int> other = {2};
  try {
    stack_system(recs, m, layout, NoiseModel::uniform(other, 1e-5));
    FAIL("expected missing noise");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingNoise);
  }
}

}  // TEST_SUITE
