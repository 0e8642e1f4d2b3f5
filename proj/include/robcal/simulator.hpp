#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "robcal/estimator.hpp"
#include "robcal/regressor.hpp"

namespace robcal {

/// Gravity load from a hanging mass; when the range is non-degenerate each
/// configuration draws its own mass uniformly from it.
struct LoadSpec {
  double mass_min_kg = 265.0;
  double mass_max_kg = 265.0;
  int attachment_marker = 0;
};

struct StudyDesign {
  std::vector<int> config_ids;
  std::vector<JointVector> configurations;  // rad
  int markers = 3;
  int repetitions = 6;
  LoadSpec load;
  /// Dispersion of each observed deflection; the loaded and unloaded
  /// positions each carry sigma / sqrt(2).
  NoiseModel noise;
  ComplianceParameterMap compliance;
  Eigen::VectorXd compliance_truth;  // rad/(N*m)
  /// Optional geometric errors added linearly to both positions.
  std::vector<GeometricParameter> geometric;
  Eigen::VectorXd geometric_truth;
  std::uint64_t seed = 1;
  /// Fraction of positions replaced by gross errors of `outlier_scale` sigma.
  double outlier_fraction = 0.0;
  double outlier_scale = 10.0;

  void validate(const ManipulatorModel& model) const;
  ParameterLayout layout() const;
  Eigen::VectorXd truth() const;
};

/// Joint angles of the fifteen measurement configurations (deg).
const std::vector<std::vector<double>>& study_configurations_deg();
/// Per-configuration dispersion means and their spread (um).
struct NoiseTableRow {
  int config;
  Eigen::Vector3d mean_um;
  Eigen::Vector3d std_um;
};
const std::vector<NoiseTableRow>& study_noise_table();
/// Reference compliances, micro-rad/(N*m), in k2_1..k2_5, k3..k6 order.
const std::vector<double>& study_compliances_report_units();

/// Representative six-axis heavy-payload arm with three markers on a 200 mm
/// radius tool plate.
ManipulatorModel study_model();
std::string study_model_text();

/// Fifteen configurations, three markers, six repetitions, 265 kg load.
StudyDesign default_study_design();

/// Per-trial seed derived from the base seed.
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial);

/// Records ordered by (config, marker, repetition); deterministic given the seed.
std::vector<ExperimentRecord> simulate_measurements(const StudyDesign& design,
                                                    const ManipulatorModel& model);

enum class WlsWeighting { Robust, Optimal };

struct CompareOptions {
  int trials = 500;
  /// Reweighting runs start from uniform weights and always evaluate
  /// covariances at their own residual dispersions.
  IrlsOptions irls;
  WlsWeighting weighting = WlsWeighting::Robust;
  bool run_irls = true;
  /// 0 selects std::thread::hardware_concurrency().
  unsigned threads = 0;
};

struct MethodSummary {
  Eigen::VectorXd mean;
  Eigen::VectorXd empirical_std;
  Eigen::MatrixXd empirical_covariance;
  Eigen::VectorXd mean_ci3;
  Eigen::MatrixXd mean_analytic_covariance;
};

struct ComparisonReport {
  std::vector<std::string> param_names;
  Eigen::VectorXd truth;
  int trials = 0;
  int failed_trials = 0;
  MethodSummary ols;
  MethodSummary wls;
  std::optional<MethodSummary> irls;
  /// Analytic (B^T S^-2 B)^-1 at the design noise.
  Eigen::MatrixXd reduced_covariance;
  Eigen::VectorXd ci_ratio;         // mean CI_OLS / mean CI_WLS
  Eigen::VectorXd empirical_ratio;  // std_OLS / std_WLS
  Eigen::VectorXd nested_fraction;  // share of trials with WLS CI inside OLS CI
  /// Mean IRLS trace; trials that stopped early repeat their final iterate.
  std::vector<Eigen::VectorXd> trace_mean;
  std::vector<Eigen::VectorXd> trace_ci3_mean;
  std::vector<int> irls_iterations;  // per trial
};

ComparisonReport monte_carlo_compare(const StudyDesign& design, const ManipulatorModel& model,
                                     const CompareOptions& options = {});

}  // namespace robcal
