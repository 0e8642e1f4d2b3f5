#pragma once

#include <Eigen/Dense>

#include <map>
#include <span>
#include <vector>

namespace robcal {

/// Identifies the origin of one scalar observation row.
struct RowTag {
  int config = 0;
  int marker = 0;
  int repetition = 0;
  int axis = 0;  // 0 = x, 1 = y, 2 = z of the measurement frame

  friend auto operator<=>(const RowTag&, const RowTag&) = default;
};

/// Per-configuration, per-axis measurement noise standard deviations (m).
struct NoiseModel {
  std::map<int, Eigen::Vector3d> sigma;
  /// Optional standard error of each sigma; same keys as `sigma` when present.
  std::map<int, Eigen::Vector3d> uncertainty;

  bool contains(int config) const { return sigma.contains(config); }

  static NoiseModel uniform(std::span<const int> configs, double sigma);
};

using ReplicateGroups = std::map<int, std::vector<Eigen::Vector3d>>;

/// Unbiased per-axis sample standard deviation of each group about its own
/// mean, with chi standard error sigma / sqrt(2 (n - 1)) as uncertainty.
NoiseModel estimate_dispersions(const ReplicateGroups& replicates);

/// Groups residual rows into per-(config, marker, repetition) 3-vectors and
/// estimates one dispersion triple per configuration.
NoiseModel dispersions_from_residuals(const Eigen::VectorXd& residuals,
                                      std::span<const RowTag> tags);

inline constexpr double kDefaultSigmaFloor = 10e-6;  // m

/// Per-row sigma resolved by (config, axis), floored at `floor`.
Eigen::VectorXd build_sigma(const NoiseModel& noise, std::span<const RowTag> tags,
                            double floor = kDefaultSigmaFloor);

}  // namespace robcal
