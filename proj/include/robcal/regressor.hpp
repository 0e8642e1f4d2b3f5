#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "robcal/kinematics.hpp"
#include "robcal/noise.hpp"

namespace robcal {

/// External load applied at a marker; torque is about that marker.
struct Wrench {
  Eigen::Vector3d force = Eigen::Vector3d::Zero();  // N
  int application_marker = 0;
  Eigen::Vector3d torque = Eigen::Vector3d::Zero();  // N*m

  Eigen::Matrix<double, 6, 1> vector() const {
    Eigen::Matrix<double, 6, 1> w;
    w << force, torque;
    return w;
  }
};

/// Pure vertical force (0, 0, -m g) from a hanging mass.
Wrench gravity_wrench(double mass_kg, int marker);

inline constexpr double kBucketTolerance = 1e-6;  // rad

/// Joint compliance parameters. One joint (joint 2 for the study robot) owns
/// a separate compliance per discrete joint-position level; the remaining
/// joints own one compliance each.
struct ComplianceParameterMap {
  std::optional<int> bucketed_joint = 1;  // 0-based
  std::vector<double> levels;             // rad, strictly monotone
  std::vector<int> tail_joints;           // 0-based

  int n_params() const { return static_cast<int>(levels.size() + tail_joints.size()); }

  /// Throws BucketMismatch when q matches no level within kBucketTolerance.
  int bucket_of(double q) const;

  std::vector<std::string> names() const;

  void validate(int n_joints) const;

  /// Bucketed joint 2, tail joints 3..n, levels collected from the configurations
  /// in order of first appearance.
  static ComplianceParameterMap from_configurations(std::span<const JointVector> configs,
                                                    int bucketed_joint = 1);
};

struct ExperimentRecord {
  int config = 0;
  int marker = 0;
  int repetition = 0;
  JointVector q;
  Wrench wrench;
  Eigen::Vector3d p0 = Eigen::Vector3d::Zero();  // unloaded position (m)
  Eigen::Vector3d p = Eigen::Vector3d::Zero();   // loaded position (m)
};

enum class IdentificationMode { Geometric, Elastostatic, Combined };

/// Column layout of the unknown vector X = [geometric errors, compliances].
struct ParameterLayout {
  IdentificationMode mode = IdentificationMode::Elastostatic;
  ComplianceParameterMap compliance;
  std::vector<GeometricParameter> geometric;

  int n_params() const;
  std::vector<std::string> names() const;
};

struct StackedSystem {
  Eigen::MatrixXd B;       // 3m x n
  Eigen::VectorXd dp;      // 3m, m
  Eigen::VectorXd sigma;   // 3m, m
  std::vector<RowTag> row_tags;
  std::vector<std::string> param_names;

  Eigen::Index rows() const { return B.rows(); }
  Eigen::Index cols() const { return B.cols(); }
  void validate() const;

  StackedSystem with_sigma(Eigen::VectorXd s) const;
  /// Rows reordered so that row i of the result is row perm[i] of this system.
  StackedSystem permuted(std::span<const Eigen::Index> perm) const;
};

/// Deflection regressor of one marker: column for joint j is
/// k_j-coefficient J_meas,j^(p) * (J_app,j^T w).
Eigen::Matrix3Xd elastostatic_regressor(const ManipulatorModel& model, const JointVector& q,
                                        const Wrench& wrench, const ComplianceParameterMap& cmap,
                                        int marker);

Eigen::Matrix3Xd geometric_regressor(const ManipulatorModel& model, const JointVector& q,
                                     int marker, std::span<const GeometricParameter> selection);

/// Rows are sorted by (config, marker, repetition, axis) regardless of input order.
/// Elastostatic observations are p - p0, geometric ones p0 - f(q) and combined
/// ones p - f(q), with f the nominal forward kinematics.
StackedSystem stack_system(std::span<const ExperimentRecord> records,
                           const ManipulatorModel& model, const ParameterLayout& layout,
                           const NoiseModel& noise, double sigma_floor = kDefaultSigmaFloor);

}  // namespace robcal
