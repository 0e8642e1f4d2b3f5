#include "robcal/noise.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "robcal/error.hpp"

namespace robcal {

NoiseModel NoiseModel::uniform(std::span<const int> configs, double sigma) {
  NoiseModel out;
  for (int c : configs) out.sigma[c] = Eigen::Vector3d::Constant(sigma);
  return out;
}

NoiseModel estimate_dispersions(const ReplicateGroups& replicates) {
  NoiseModel out;
  for (const auto& [config, group] : replicates) {
    const auto n = static_cast<double>(group.size());
    if (group.size() < 2) {
      throw Error(ErrorCode::InvalidArgument, "configuration " + std::to_string(config) +
                                                  " has fewer than 2 replicates");
    }
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& r : group) mean += r;
    mean /= n;
    Eigen::Vector3d ss = Eigen::Vector3d::Zero();
    for (const auto& r : group) ss += (r - mean).cwiseAbs2();
    const Eigen::Vector3d s = (ss / (n - 1.0)).cwiseSqrt();
    out.sigma[config] = s;
    out.uncertainty[config] = s / std::sqrt(2.0 * (n - 1.0));
  }
  return out;
}

NoiseModel dispersions_from_residuals(const Eigen::VectorXd& residuals,
                                      std::span<const RowTag> tags) {
  if (static_cast<std::size_t>(residuals.size()) != tags.size()) {
    throw Error(ErrorCode::InvalidArgument, "residual/tag length mismatch");
  }
  std::map<std::tuple<int, int, int>, Eigen::Vector3d> points;
  std::map<std::tuple<int, int, int>, int> seen;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto key = std::make_tuple(tags[i].config, tags[i].marker, tags[i].repetition);
    auto [it, fresh] = points.try_emplace(key, Eigen::Vector3d::Zero());
    it->second[tags[i].axis] = residuals[static_cast<Eigen::Index>(i)];
    seen[key] |= 1 << tags[i].axis;
  }
  ReplicateGroups groups;
  for (const auto& [key, value] : points) {
    if (seen[key] != 0b111) {
      throw Error(ErrorCode::InvalidArgument, "residual rows do not form complete x/y/z triples");
    }
    groups[std::get<0>(key)].push_back(value);
  }
  return estimate_dispersions(groups);
}

Eigen::VectorXd build_sigma(const NoiseModel& noise, std::span<const RowTag> tags, double floor) {
  if (!(floor > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma floor must be positive");
  Eigen::VectorXd out(static_cast<Eigen::Index>(tags.size()));
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto it = noise.sigma.find(tags[i].config);
    if (it == noise.sigma.end()) {
      throw Error(ErrorCode::MissingNoise,
                  "no noise entry for configuration " + std::to_string(tags[i].config));
    }
    if (tags[i].axis < 0 || tags[i].axis > 2) {
      throw Error(ErrorCode::InvalidArgument, "row tag axis out of range");
    }
    const double s = it->second[tags[i].axis];
    if (!std::isfinite(s) || s < 0.0) {
      throw Error(ErrorCode::InvalidArgument,
                  "invalid sigma for configuration " + std::to_string(tags[i].config));
    }
    out[static_cast<Eigen::Index>(i)] = std::max(s, floor);
  }
  return out;
}

}  // namespace robcal
