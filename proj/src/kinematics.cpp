#include "robcal/kinematics.hpp"

#include <charconv>
#include <cmath>

#include "robcal/error.hpp"

namespace robcal {

namespace {

struct Chain {
  // frames[0] is the base, frames[j + 1] the frame of joint j after its variable.
  std::vector<Eigen::Isometry3d> frames;
  Eigen::Isometry3d flange;
  Eigen::Vector3d marker_position;
};

Eigen::Isometry3d link_transform(const DhJoint& j, double q) {
  const double theta = j.theta_offset + (j.type == JointType::Revolute ? q : 0.0);
  const double d = j.d + (j.type == JointType::Prismatic ? q : 0.0);
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.rotate(Eigen::AngleAxisd(j.alpha, Eigen::Vector3d::UnitX()));
  t.translate(Eigen::Vector3d(j.a, 0.0, 0.0));
  t.rotate(Eigen::AngleAxisd(theta, Eigen::Vector3d::UnitZ()));
  t.translate(Eigen::Vector3d(0.0, 0.0, d));
  return t;
}

void check_inputs(const ManipulatorModel& model, const JointVector& q, int marker) {
  if (q.size() != model.n_joints()) {
    throw Error(ErrorCode::InvalidArgument,
                "joint vector has " + std::to_string(q.size()) + " entries, model has " +
                    std::to_string(model.n_joints()) + " joints");
  }
  if (!q.allFinite()) throw Error(ErrorCode::InvalidArgument, "joint vector is not finite");
  if (marker < 0 || marker >= model.n_markers()) {
    throw Error(ErrorCode::InvalidArgument, "marker index " + std::to_string(marker) +
                                                " out of range [0, " +
                                                std::to_string(model.n_markers()) + ")");
  }
}

Chain compose(const ManipulatorModel& model, const JointVector& q, int marker) {
  check_inputs(model, q, marker);
  Chain c;
  c.frames.reserve(model.joints.size() + 1);
  c.frames.push_back(model.base);
  for (int j = 0; j < model.n_joints(); ++j) {
    c.frames.push_back(c.frames.back() * link_transform(model.joints[j], q[j]));
  }
  c.flange = c.frames.back() * model.tool;
  c.marker_position = c.flange * model.markers[marker];
  return c;
}

std::string_view kind_stem(ParamKind k) {
  switch (k) {
    case ParamKind::BaseX: return "base_x";
    case ParamKind::BaseY: return "base_y";
    case ParamKind::BaseZ: return "base_z";
    case ParamKind::A: return "a";
    case ParamKind::Alpha: return "alpha";
    case ParamKind::D: return "d";
    case ParamKind::Theta: return "theta";
    case ParamKind::ToolX: return "tool_x";
    case ParamKind::ToolY: return "tool_y";
    case ParamKind::ToolZ: return "tool_z";
    case ParamKind::MarkerX: return "x";
    case ParamKind::MarkerY: return "y";
    case ParamKind::MarkerZ: return "z";
  }
  return "?";
}

bool is_joint_kind(ParamKind k) {
  return k == ParamKind::A || k == ParamKind::Alpha || k == ParamKind::D || k == ParamKind::Theta;
}

bool is_marker_kind(ParamKind k) {
  return k == ParamKind::MarkerX || k == ParamKind::MarkerY || k == ParamKind::MarkerZ;
}

void check_parameter(const ManipulatorModel& model, const GeometricParameter& p) {
  if (is_joint_kind(p.kind) && (p.index < 0 || p.index >= model.n_joints())) {
    throw Error(ErrorCode::InvalidArgument, "unknown parameter " + p.name());
  }
  if (is_marker_kind(p.kind) && (p.index < 0 || p.index >= model.n_markers())) {
    throw Error(ErrorCode::InvalidArgument, "unknown parameter " + p.name());
  }
}

int axis_of(ParamKind k) {
  switch (k) {
    case ParamKind::BaseY:
    case ParamKind::ToolY:
    case ParamKind::MarkerY: return 1;
    case ParamKind::BaseZ:
    case ParamKind::ToolZ:
    case ParamKind::MarkerZ: return 2;
    default: return 0;
  }
}

}  // namespace

void ManipulatorModel::validate() const {
  if (joints.empty()) throw Error(ErrorCode::InvalidArgument, "model has no joints");
  if (!is_rotation(base.linear())) {
    throw Error(ErrorCode::InvalidArgument, "base rotation is not orthonormal");
  }
  if (!is_rotation(tool.linear())) {
    throw Error(ErrorCode::InvalidArgument, "tool rotation is not orthonormal");
  }
  if (!base.translation().allFinite() || !tool.translation().allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "base/tool translation is not finite");
  }
  for (const auto& j : joints) {
    if (!std::isfinite(j.a) || !std::isfinite(j.alpha) || !std::isfinite(j.d) ||
        !std::isfinite(j.theta_offset)) {
      throw Error(ErrorCode::InvalidArgument, "joint parameters are not finite");
    }
  }
  for (const auto& m : markers) {
    if (!m.allFinite()) throw Error(ErrorCode::InvalidArgument, "marker offset is not finite");
  }
}

std::string GeometricParameter::name() const {
  if (is_joint_kind(kind)) return std::string(kind_stem(kind)) + std::to_string(index + 1);
  if (is_marker_kind(kind)) {
    return "marker" + std::to_string(index + 1) + "_" + std::string(kind_stem(kind));
  }
  return std::string(kind_stem(kind));
}

GeometricParameter parse_parameter(const std::string& name) {
  auto fail = [&]() -> GeometricParameter {
    throw Error(ErrorCode::InvalidArgument, "unknown parameter name '" + name + "'");
  };
  auto number = [&](std::string_view digits) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || v < 1) fail();
    return v - 1;
  };
  for (ParamKind k : {ParamKind::BaseX, ParamKind::BaseY, ParamKind::BaseZ, ParamKind::ToolX,
                      ParamKind::ToolY, ParamKind::ToolZ}) {
    if (name == kind_stem(k)) return {k, 0};
  }
  std::string_view s(name);
  if (s.starts_with("marker")) {
    const auto us = s.find('_');
    if (us == std::string_view::npos || us + 2 != s.size()) return fail();
    const int idx = number(s.substr(6, us - 6));
    switch (s.back()) {
      case 'x': return {ParamKind::MarkerX, idx};
      case 'y': return {ParamKind::MarkerY, idx};
      case 'z': return {ParamKind::MarkerZ, idx};
      default: return fail();
    }
  }
  // Longest stems first so "alpha" is not read as "a".
  for (ParamKind k : {ParamKind::Alpha, ParamKind::Theta, ParamKind::A, ParamKind::D}) {
    const auto stem = kind_stem(k);
    if (s.starts_with(stem) && s.size() > stem.size()) {
      return {k, number(s.substr(stem.size()))};
    }
  }
  return fail();
}

double parameter_value(const ManipulatorModel& model, const GeometricParameter& p) {
  check_parameter(model, p);
  switch (p.kind) {
    case ParamKind::BaseX:
    case ParamKind::BaseY:
    case ParamKind::BaseZ: return model.base.translation()[axis_of(p.kind)];
    case ParamKind::A: return model.joints[p.index].a;
    case ParamKind::Alpha: return model.joints[p.index].alpha;
    case ParamKind::D: return model.joints[p.index].d;
    case ParamKind::Theta: return model.joints[p.index].theta_offset;
    case ParamKind::ToolX:
    case ParamKind::ToolY:
    case ParamKind::ToolZ: return model.tool.translation()[axis_of(p.kind)];
    case ParamKind::MarkerX:
    case ParamKind::MarkerY:
    case ParamKind::MarkerZ: return model.markers[p.index][axis_of(p.kind)];
  }
  return 0.0;
}

ManipulatorModel with_parameter(const ManipulatorModel& model, const GeometricParameter& p,
                                double value) {
  check_parameter(model, p);
  ManipulatorModel out = model;
  switch (p.kind) {
    case ParamKind::BaseX:
    case ParamKind::BaseY:
    case ParamKind::BaseZ: out.base.translation()[axis_of(p.kind)] = value; break;
    case ParamKind::A: out.joints[p.index].a = value; break;
    case ParamKind::Alpha: out.joints[p.index].alpha = value; break;
    case ParamKind::D: out.joints[p.index].d = value; break;
    case ParamKind::Theta: out.joints[p.index].theta_offset = value; break;
    case ParamKind::ToolX:
    case ParamKind::ToolY:
    case ParamKind::ToolZ: out.tool.translation()[axis_of(p.kind)] = value; break;
    case ParamKind::MarkerX:
    case ParamKind::MarkerY:
    case ParamKind::MarkerZ: out.markers[p.index][axis_of(p.kind)] = value; break;
  }
  return out;
}

std::vector<GeometricParameter> all_parameters(const ManipulatorModel& model) {
  std::vector<GeometricParameter> out = {
      {ParamKind::BaseX, 0}, {ParamKind::BaseY, 0}, {ParamKind::BaseZ, 0}};
  for (int j = 0; j < model.n_joints(); ++j) {
    for (ParamKind k : {ParamKind::A, ParamKind::Alpha, ParamKind::D, ParamKind::Theta}) {
      out.push_back({k, j});
    }
  }
  for (ParamKind k : {ParamKind::ToolX, ParamKind::ToolY, ParamKind::ToolZ}) out.push_back({k, 0});
  for (int m = 0; m < model.n_markers(); ++m) {
    for (ParamKind k : {ParamKind::MarkerX, ParamKind::MarkerY, ParamKind::MarkerZ}) {
      out.push_back({k, m});
    }
  }
  return out;
}

bool is_rotation(const Eigen::Matrix3d& r, double tol) {
  if (!r.allFinite()) return false;
  return (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
         r.determinant() > 0.0;
}

Pose forward_kinematics(const ManipulatorModel& model, const JointVector& q, int marker) {
  const Chain c = compose(model, q, marker);
  return {c.marker_position, c.flange.linear()};
}

JointJacobian joint_jacobian(const ManipulatorModel& model, const JointVector& q, int marker) {
  const Chain c = compose(model, q, marker);
  JointJacobian jac(6, model.n_joints());
  for (int j = 0; j < model.n_joints(); ++j) {
    const Eigen::Isometry3d& f = c.frames[j + 1];
    const Eigen::Vector3d z = f.linear().col(2);
    if (model.joints[j].type == JointType::Revolute) {
      jac.col(j) << z.cross(c.marker_position - f.translation()), z;
    } else {
      jac.col(j) << z, Eigen::Vector3d::Zero();
    }
  }
  return jac;
}

Eigen::Matrix3Xd parameter_jacobian(const ManipulatorModel& model, const JointVector& q,
                                    int marker, std::span<const GeometricParameter> selection) {
  if (selection.empty()) throw Error(ErrorCode::InvalidArgument, "empty parameter selection");
  for (const auto& p : selection) check_parameter(model, p);
  const Chain c = compose(model, q, marker);
  const Eigen::Vector3d& p = c.marker_position;

  Eigen::Matrix3Xd out(3, static_cast<Eigen::Index>(selection.size()));
  for (std::size_t k = 0; k < selection.size(); ++k) {
    const GeometricParameter& par = selection[k];
    auto col = out.col(static_cast<Eigen::Index>(k));
    switch (par.kind) {
      case ParamKind::BaseX:
      case ParamKind::BaseY:
      case ParamKind::BaseZ: col = Eigen::Vector3d::Unit(axis_of(par.kind)); break;
      case ParamKind::A: col = c.frames[par.index].linear().col(0); break;
      case ParamKind::Alpha: {
        const Eigen::Isometry3d& f = c.frames[par.index];
        col = f.linear().col(0).cross(p - f.translation());
        break;
      }
      case ParamKind::D: col = c.frames[par.index + 1].linear().col(2); break;
      case ParamKind::Theta: {
        const Eigen::Isometry3d& f = c.frames[par.index + 1];
        col = f.linear().col(2).cross(p - f.translation());
        break;
      }
      case ParamKind::ToolX:
      case ParamKind::ToolY:
      case ParamKind::ToolZ: col = c.frames.back().linear().col(axis_of(par.kind)); break;
      case ParamKind::MarkerX:
      case ParamKind::MarkerY:
      case ParamKind::MarkerZ:
        col = par.index == marker ? Eigen::Vector3d(c.flange.linear().col(axis_of(par.kind)))
                                  : Eigen::Vector3d::Zero();
        break;
    }
  }
  return out;
}

}  // namespace robcal
