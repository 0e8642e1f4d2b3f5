#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <span>
#include <string>
#include <vector>

namespace robcal {

enum class JointType { Revolute, Prismatic };

/// One link in modified Denavit-Hartenberg form:
/// T = RotX(alpha) * TransX(a) * RotZ(theta) * TransZ(d).
/// The joint variable adds to theta (revolute) or d (prismatic).
struct DhJoint {
  JointType type = JointType::Revolute;
  double a = 0.0;             // m
  double alpha = 0.0;         // rad
  double d = 0.0;             // m
  double theta_offset = 0.0;  // rad
};

struct ManipulatorModel {
  Eigen::Isometry3d base = Eigen::Isometry3d::Identity();
  std::vector<DhJoint> joints;
  /// Last joint frame -> flange.
  Eigen::Isometry3d tool = Eigen::Isometry3d::Identity();
  /// Marker offsets in the flange frame (m).
  std::vector<Eigen::Vector3d> markers;

  int n_joints() const { return static_cast<int>(joints.size()); }
  int n_markers() const { return static_cast<int>(markers.size()); }

  /// Throws InvalidArgument when the model breaks its invariants.
  void validate() const;
};

using JointVector = Eigen::VectorXd;
using JointJacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;

struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();
};

/// Identifies one scalar geometric parameter of a ManipulatorModel.
enum class ParamKind {
  BaseX, BaseY, BaseZ,
  A, Alpha, D, Theta,
  ToolX, ToolY, ToolZ,
  MarkerX, MarkerY, MarkerZ,
};

struct GeometricParameter {
  ParamKind kind = ParamKind::A;
  /// Joint index for DH kinds, marker index for marker kinds, unused otherwise.
  int index = 0;

  std::string name() const;
  friend bool operator==(const GeometricParameter&, const GeometricParameter&) = default;
};

/// Parses names produced by GeometricParameter::name(), e.g. "a3", "theta2",
/// "tool_x", "marker1_z". Joint and marker numbers are 1-based in names.
GeometricParameter parse_parameter(const std::string& name);

double parameter_value(const ManipulatorModel& model, const GeometricParameter& p);
ManipulatorModel with_parameter(const ManipulatorModel& model, const GeometricParameter& p,
                                double value);

/// Every DH parameter plus base/tool translations and marker offsets.
std::vector<GeometricParameter> all_parameters(const ManipulatorModel& model);

bool is_rotation(const Eigen::Matrix3d& r, double tol = 1e-9);

Pose forward_kinematics(const ManipulatorModel& model, const JointVector& q, int marker);

/// Column j holds the marker twist for joint j: 3 linear rows, then 3 angular rows.
JointJacobian joint_jacobian(const ManipulatorModel& model, const JointVector& q, int marker);

/// d(marker position)/d(parameter), analytic.
Eigen::Matrix3Xd parameter_jacobian(const ManipulatorModel& model, const JointVector& q,
                                    int marker, std::span<const GeometricParameter> selection);

}  // namespace robcal
