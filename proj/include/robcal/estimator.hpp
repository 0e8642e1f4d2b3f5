#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "robcal/regressor.hpp"

namespace robcal {

enum class Method { Ols, Wls, Irls };

std::string_view method_name(Method m);

/// Diagonal of the weighting matrix W; the objective is |W (B X - dp)|^2.
struct WeightMatrix {
  Eigen::VectorXd w;
};

struct IterationRecord {
  Eigen::VectorXd x_hat;
  Eigen::VectorXd ci3;
  /// Largest per-parameter relative change from the previous iterate
  /// (infinite on the first).
  double max_rel_change = 0.0;
};

struct EstimationResult {
  Method method = Method::Ols;
  std::vector<std::string> param_names;
  Eigen::VectorXd x_hat;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd ci3;        // 3 sqrt(diag(covariance))
  Eigen::VectorXd residuals;  // B x_hat - dp
  Eigen::VectorXd weights;    // all ones for OLS
  Eigen::VectorXd sigma;      // per-row sigma the covariance was evaluated with
  std::vector<IterationRecord> iterations;
  std::vector<std::string> warnings;
  bool converged = true;
  /// Set when reweighting stopped early because an iterate lost rank.
  bool diverged = false;
};

inline constexpr double kRankCutoff = 1e-10;
inline constexpr double kRankWarning = 1e-8;

/// Unweighted least squares with the heteroscedastic sandwich covariance
/// evaluated at sys.sigma.
EstimationResult ols_estimate(const StackedSystem& sys);

/// Weighted least squares; covariance is the general weighted sandwich
/// evaluated at sys.sigma.
EstimationResult wls_estimate(const StackedSystem& sys, const WeightMatrix& weights);

/// w_i = a / sigma_i.
WeightMatrix optimal_weights(const Eigen::VectorXd& sigma, double a = 1.0);

/// w_i = sigma0 / (sigma0 + lambda sigma_i).
WeightMatrix robust_weights(const Eigen::VectorXd& sigma, double sigma0, double lambda);

struct IrlsOptions {
  double sigma0 = kDefaultSigmaFloor;  // m
  double lambda = 1.0;
  int max_iter = 20;
  double rel_tol = 1e-3;
  /// Evaluate each iterate's covariance at the dispersions re-estimated from
  /// its own residuals instead of the dispersions its weights came from.
  bool covariance_from_own_residuals = false;
};

/// Iteratively reweighted least squares. Iterate 1 weights come from sys.sigma;
/// each later iterate re-estimates per-(config, axis) dispersions from the
/// previous residuals (floored at sigma0) and solves again with robust weights.
/// By default each iterate's covariance is evaluated with the dispersions its
/// weights came from.
EstimationResult irls(const StackedSystem& sys, const IrlsOptions& options = {});

/// x_hat +/- 3 sqrt(cov_ii).
std::vector<std::pair<double, double>> confidence_intervals(const EstimationResult& result);

/// Per-parameter CI_OLS / CI_WLS.
Eigen::VectorXd ci_ratios(const EstimationResult& ols, const EstimationResult& wls);

/// Whether the second result's interval lies inside the first's, per parameter.
std::vector<bool> nested_intervals(const EstimationResult& outer, const EstimationResult& inner);

// Covariance forms. All take the stacked regressor and per-row quantities.

/// sigma^2 (B^T B)^-1
Eigen::MatrixXd iid_covariance(const Eigen::MatrixXd& B, double sigma);
/// (B^T B)^-1 (B^T S^2 B) (B^T B)^-1, S = diag(sigma)
Eigen::MatrixXd sandwich_covariance(const Eigen::MatrixXd& B, const Eigen::VectorXd& sigma);
/// (B^T W^2 B)^-1 (B^T W^2 S^2 W^2 B) (B^T W^2 B)^-1
Eigen::MatrixXd weighted_sandwich_covariance(const Eigen::MatrixXd& B, const Eigen::VectorXd& w,
                                             const Eigen::VectorXd& sigma);
/// (B^T S^-2 B)^-1, the weighted sandwich at W S = I.
Eigen::MatrixXd reduced_covariance(const Eigen::MatrixXd& B, const Eigen::VectorXd& sigma);

}  // namespace robcal
