#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "robcal/kinematics.hpp"

namespace robcal::test {

inline double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

inline Eigen::Isometry3d random_pose(std::mt19937_64& rng, double reach) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Quaterniond qr(u(rng), u(rng), u(rng), u(rng));
  qr.normalize();
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = qr.toRotationMatrix();
  t.translation() = reach * Eigen::Vector3d(u(rng), u(rng), u(rng));
  return t;
}

/// 1..7 joints, roughly one in five prismatic, 1..3 markers.
inline ManipulatorModel random_model(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> nj(1, 7), nm(1, 3), kind(0, 4);
  ManipulatorModel m;
  m.base = random_pose(rng, 0.5);
  m.tool = random_pose(rng, 0.2);
  const int n = nj(rng);
  for (int j = 0; j < n; ++j) {
    DhJoint jt;
    jt.type = kind(rng) == 0 ? JointType::Prismatic : JointType::Revolute;
    jt.a = u(rng);
    jt.alpha = M_PI * u(rng);
    jt.d = u(rng);
    jt.theta_offset = M_PI * u(rng);
    m.joints.push_back(jt);
  }
  const int k = nm(rng);
  for (int i = 0; i < k; ++i) m.markers.emplace_back(0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng));
  return m;
}

inline JointVector random_q(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-M_PI, M_PI);
  JointVector q(n);
  for (int i = 0; i < n; ++i) q[i] = u(rng);
  return q;
}

/// Straight-line modified DH product with explicit matrix entries.
inline Eigen::Vector3d oracle_position(const ManipulatorModel& m, const JointVector& q,
                                       int marker) {
  Eigen::Matrix4d t = m.base.matrix();
  for (int j = 0; j < m.n_joints(); ++j) {
    const DhJoint& jt = m.joints[static_cast<std::size_t>(j)];
    double theta = jt.theta_offset, d = jt.d;
    if (jt.type == JointType::Revolute) theta += q[j]; else d += q[j];
    const double ct = std::cos(theta), st = std::sin(theta);
    const double ca = std::cos(jt.alpha), sa = std::sin(jt.alpha);
    Eigen::Matrix4d a;
    a << ct, -st, 0, jt.a,
         st * ca, ct * ca, -sa, -sa * d,
         st * sa, ct * sa, ca, ca * d,
         0, 0, 0, 1;
    t = t * a;
  }
  t = t * m.tool.matrix();
  const Eigen::Vector3d& off = m.markers[static_cast<std::size_t>(marker)];
  return (t * Eigen::Vector4d(off.x(), off.y(), off.z(), 1.0)).head<3>();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("robcal_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace robcal::test
