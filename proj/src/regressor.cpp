#include "robcal/regressor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "robcal/error.hpp"
#include "robcal/units.hpp"

namespace robcal {

Wrench gravity_wrench(double mass_kg, int marker) {
  Wrench w;
  w.force = Eigen::Vector3d(0.0, 0.0, -mass_kg * units::kGravity);
  w.application_marker = marker;
  return w;
}

int ComplianceParameterMap::bucket_of(double q) const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (std::abs(q - levels[i]) <= kBucketTolerance) return static_cast<int>(i);
  }
  throw Error(ErrorCode::BucketMismatch,
              "joint position " + std::to_string(units::rad_to_deg(q)) +
                  " deg matches no compliance level");
}

std::vector<std::string> ComplianceParameterMap::names() const {
  std::vector<std::string> out;
  if (bucketed_joint) {
    for (std::size_t i = 0; i < levels.size(); ++i) {
      out.push_back("k" + std::to_string(*bucketed_joint + 1) + "_" + std::to_string(i + 1));
    }
  }
  for (int j : tail_joints) out.push_back("k" + std::to_string(j + 1));
  return out;
}

void ComplianceParameterMap::validate(int n_joints) const {
  if (!levels.empty() && !bucketed_joint) {
    throw Error(ErrorCode::InvalidArgument, "compliance levels given without a bucketed joint");
  }
  if (bucketed_joint && (*bucketed_joint < 0 || *bucketed_joint >= n_joints)) {
    throw Error(ErrorCode::InvalidArgument, "bucketed joint out of range");
  }
  for (int j : tail_joints) {
    if (j < 0 || j >= n_joints || (bucketed_joint && j == *bucketed_joint)) {
      throw Error(ErrorCode::InvalidArgument, "invalid tail joint " + std::to_string(j + 1));
    }
  }
  if (std::adjacent_find(tail_joints.begin(), tail_joints.end(),
                         [](int a, int b) { return a >= b; }) != tail_joints.end()) {
    throw Error(ErrorCode::InvalidArgument, "tail joints must be strictly increasing");
  }
  if (levels.size() >= 2) {
    const bool up = levels[1] > levels[0];
    for (std::size_t i = 1; i < levels.size(); ++i) {
      const double step = levels[i] - levels[i - 1];
      if (!(up ? step > kBucketTolerance : -step > kBucketTolerance)) {
        throw Error(ErrorCode::InvalidArgument, "compliance levels must be strictly ordered");
      }
    }
  }
}

ComplianceParameterMap ComplianceParameterMap::from_configurations(
    std::span<const JointVector> configs, int bucketed_joint) {
  ComplianceParameterMap cmap;
  cmap.bucketed_joint = bucketed_joint;
  int n_joints = 0;
  for (const auto& q : configs) {
    n_joints = static_cast<int>(q.size());
    if (bucketed_joint >= n_joints) {
      throw Error(ErrorCode::InvalidArgument, "bucketed joint out of range");
    }
    const double v = q[bucketed_joint];
    const bool known = std::any_of(cmap.levels.begin(), cmap.levels.end(), [&](double l) {
      return std::abs(l - v) <= kBucketTolerance;
    });
    if (!known) cmap.levels.push_back(v);
  }
  for (int j = bucketed_joint + 1; j < n_joints; ++j) cmap.tail_joints.push_back(j);
  return cmap;
}

int ParameterLayout::n_params() const {
  switch (mode) {
    case IdentificationMode::Geometric: return static_cast<int>(geometric.size());
    case IdentificationMode::Elastostatic: return compliance.n_params();
    case IdentificationMode::Combined:
      return static_cast<int>(geometric.size()) + compliance.n_params();
  }
  return 0;
}

std::vector<std::string> ParameterLayout::names() const {
  std::vector<std::string> out;
  if (mode != IdentificationMode::Elastostatic) {
    for (const auto& g : geometric) out.push_back("d_" + g.name());
  }
  if (mode != IdentificationMode::Geometric) {
    for (auto& n : compliance.names()) out.push_back(std::move(n));
  }
  return out;
}

void StackedSystem::validate() const {
  const auto m = B.rows();
  if (dp.size() != m || sigma.size() != m || static_cast<Eigen::Index>(row_tags.size()) != m) {
    throw Error(ErrorCode::InvalidArgument, "stacked system row counts disagree");
  }
  if (static_cast<Eigen::Index>(param_names.size()) != B.cols()) {
    throw Error(ErrorCode::InvalidArgument, "stacked system column names disagree");
  }
  if (!(sigma.array() > 0.0).all()) {
    throw Error(ErrorCode::InvalidArgument, "stacked system sigma must be positive");
  }
}

StackedSystem StackedSystem::with_sigma(Eigen::VectorXd s) const {
  StackedSystem out = *this;
  out.sigma = std::move(s);
  return out;
}

StackedSystem StackedSystem::permuted(std::span<const Eigen::Index> perm) const {
  if (static_cast<Eigen::Index>(perm.size()) != rows()) {
    throw Error(ErrorCode::InvalidArgument, "permutation length mismatch");
  }
  StackedSystem out;
  out.B.resize(B.rows(), B.cols());
  out.dp.resize(dp.size());
  out.sigma.resize(sigma.size());
  out.param_names = param_names;
  for (Eigen::Index i = 0; i < rows(); ++i) {
    const Eigen::Index src = perm[static_cast<std::size_t>(i)];
    out.B.row(i) = B.row(src);
    out.dp[i] = dp[src];
    out.sigma[i] = sigma[src];
    out.row_tags.push_back(row_tags[static_cast<std::size_t>(src)]);
  }
  return out;
}

Eigen::Matrix3Xd elastostatic_regressor(const ManipulatorModel& model, const JointVector& q,
                                        const Wrench& wrench, const ComplianceParameterMap& cmap,
                                        int marker) {
  cmap.validate(model.n_joints());
  if (!wrench.force.allFinite() || !wrench.torque.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "wrench is not finite");
  }
  const JointJacobian j_meas = joint_jacobian(model, q, marker);
  const JointJacobian j_app = wrench.application_marker == marker
                                  ? j_meas
                                  : joint_jacobian(model, q, wrench.application_marker);
  const Eigen::Matrix<double, 6, 1> w = wrench.vector();

  Eigen::Matrix3Xd a = Eigen::Matrix3Xd::Zero(3, cmap.n_params());
  auto column = [&](int joint) -> Eigen::Vector3d {
    return j_meas.col(joint).head<3>() * j_app.col(joint).dot(w);
  };
  const int n_levels = static_cast<int>(cmap.levels.size());
  if (n_levels > 0) {
    const int bucket = cmap.bucket_of(q[*cmap.bucketed_joint]);
    a.col(bucket) = column(*cmap.bucketed_joint);
  }
  for (std::size_t t = 0; t < cmap.tail_joints.size(); ++t) {
    a.col(n_levels + static_cast<int>(t)) = column(cmap.tail_joints[t]);
  }
  return a;
}

Eigen::Matrix3Xd geometric_regressor(const ManipulatorModel& model, const JointVector& q,
                                     int marker, std::span<const GeometricParameter> selection) {
  return parameter_jacobian(model, q, marker, selection);
}

StackedSystem stack_system(std::span<const ExperimentRecord> records,
                           const ManipulatorModel& model, const ParameterLayout& layout,
                           const NoiseModel& noise, double sigma_floor) {
  const int n = layout.n_params();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "no parameters selected");
  if (layout.mode != IdentificationMode::Geometric) layout.compliance.validate(model.n_joints());

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = records[a];
    const auto& rb = records[b];
    return std::tie(ra.config, ra.marker, ra.repetition) <
           std::tie(rb.config, rb.marker, rb.repetition);
  });

  const auto m = static_cast<Eigen::Index>(3 * records.size());
  if (m < n) {
    throw Error(ErrorCode::Underdetermined, std::to_string(m) + " equations for " +
                                                std::to_string(n) + " parameters");
  }
  StackedSystem sys;
  sys.B.resize(m, n);
  sys.dp.resize(m);
  sys.row_tags.reserve(static_cast<std::size_t>(m));
  sys.param_names = layout.names();

  const int n_geo =
      layout.mode == IdentificationMode::Elastostatic ? 0 : static_cast<int>(layout.geometric.size());
  Eigen::Index row = 0;
  for (std::size_t idx : order) {
    const ExperimentRecord& r = records[idx];
    if (r.q.size() != model.n_joints()) {
      throw Error(ErrorCode::InvalidArgument,
                  "record for configuration " + std::to_string(r.config) +
                      " has a joint vector of the wrong length");
    }
    if (!noise.contains(r.config)) {
      throw Error(ErrorCode::MissingNoise,
                  "no noise entry for configuration " + std::to_string(r.config));
    }
    Eigen::Matrix3Xd block(3, n);
    Eigen::Vector3d obs;
    switch (layout.mode) {
      case IdentificationMode::Elastostatic:
        block = elastostatic_regressor(model, r.q, r.wrench, layout.compliance, r.marker);
        obs = r.p - r.p0;
        break;
      case IdentificationMode::Geometric:
        block = geometric_regressor(model, r.q, r.marker, layout.geometric);
        obs = r.p0 - forward_kinematics(model, r.q, r.marker).position;
        break;
      case IdentificationMode::Combined:
        block.leftCols(n_geo) = geometric_regressor(model, r.q, r.marker, layout.geometric);
        block.rightCols(n - n_geo) =
            elastostatic_regressor(model, r.q, r.wrench, layout.compliance, r.marker);
        obs = r.p - forward_kinematics(model, r.q, r.marker).position;
        break;
    }
    for (int axis = 0; axis < 3; ++axis) {
      sys.B.row(row) = block.row(axis);
      sys.dp[row] = obs[axis];
      sys.row_tags.push_back({r.config, r.marker, r.repetition, axis});
      ++row;
    }
  }
  sys.sigma = build_sigma(noise, sys.row_tags, sigma_floor);
  return sys;
}

}  // namespace robcal
