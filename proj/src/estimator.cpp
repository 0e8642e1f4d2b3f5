#include "robcal/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "robcal/error.hpp"

namespace robcal {

namespace {

std::vector<std::string> default_names(Eigen::Index n) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < n; ++i) out.push_back("x" + std::to_string(i + 1));
  return out;
}

std::string describe_direction(const Eigen::VectorXd& v, const std::vector<std::string>& names) {
  std::ostringstream os;
  os.precision(3);
  bool first = true;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) < 1e-3) continue;
    os << (first ? (v[i] < 0 ? "-" : "") : (v[i] < 0 ? " - " : " + ")) << std::abs(v[i]) << "*"
       << names[static_cast<std::size_t>(i)];
    first = false;
  }
  return os.str();
}

/// Column-equilibrated SVD of diag(w) B; P is the pseudo-inverse of diag(w) B,
/// so that X = P (w .* dp) and (B^T W^2 B)^-1 = P P^T.
struct WeightedFactorization {
  Eigen::MatrixXd P;
  std::vector<std::string> warnings;

  WeightedFactorization(const Eigen::MatrixXd& B, const Eigen::VectorXd& w,
                        const std::vector<std::string>& names) {
    if (w.size() != B.rows()) throw Error(ErrorCode::InvalidArgument, "weight length mismatch");
    if (!w.allFinite() || (w.array() < 0.0).any()) {
      throw Error(ErrorCode::InvalidArgument, "weights must be finite and non-negative");
    }
    if ((w.array() == 0.0).all()) throw Error(ErrorCode::InvalidArgument, "all weights are zero");
    if (B.rows() < B.cols()) {
      throw Error(ErrorCode::Underdetermined, std::to_string(B.rows()) + " equations for " +
                                                  std::to_string(B.cols()) + " parameters");
    }
    const Eigen::MatrixXd wb = w.asDiagonal() * B;
    const Eigen::VectorXd norms = wb.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < norms.size(); ++j) {
      if (!(norms[j] > 0.0)) {
        throw Error(ErrorCode::RankDeficient,
                    "information matrix is rank deficient; unidentifiable: " +
                        names[static_cast<std::size_t>(j)]);
      }
    }
    const Eigen::VectorXd scale = norms.cwiseInverse();
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(wb * scale.asDiagonal(),
                                                Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double smax = s[0];
    auto direction = [&](Eigen::Index k) {
      Eigen::VectorXd v = scale.asDiagonal() * svd.matrixV().col(k);
      v /= v.norm();
      return describe_direction(v, names);
    };
    std::string null_dirs;
    for (Eigen::Index k = 0; k < s.size(); ++k) {
      if (s[k] < kRankCutoff * smax) {
        null_dirs += (null_dirs.empty() ? "" : "; ") + direction(k);
      }
    }
    if (!null_dirs.empty()) {
      throw Error(ErrorCode::RankDeficient,
                  "information matrix is rank deficient; unidentifiable combinations: " +
                      null_dirs);
    }
    const Eigen::Index last = s.size() - 1;
    if (s[last] < kRankWarning * smax) {
      warnings.push_back("near rank deficiency (relative singular value " +
                         std::to_string(s[last] / smax) + "), weakest direction: " +
                         direction(last));
    }
    P = scale.asDiagonal() * svd.matrixV() * s.cwiseInverse().asDiagonal() *
        svd.matrixU().transpose();
  }

  /// P diag(w .* sigma)^2 P^T
  Eigen::MatrixXd sandwich(const Eigen::VectorXd& w, const Eigen::VectorXd& sigma) const {
    const Eigen::MatrixXd q = P * w.cwiseProduct(sigma).asDiagonal();
    Eigen::MatrixXd cov = q * q.transpose();
    return 0.5 * (cov + cov.transpose());
  }

  Eigen::MatrixXd inverse_information() const {
    Eigen::MatrixXd cov = P * P.transpose();
    return 0.5 * (cov + cov.transpose());
  }
};

Eigen::VectorXd three_sigma(const Eigen::MatrixXd& cov) {
  const Eigen::VectorXd d = cov.diagonal();
  if ((d.array() < 0.0).any()) {
    throw Error(ErrorCode::Internal, "covariance has a negative diagonal entry");
  }
  return 3.0 * d.cwiseSqrt();
}

EstimationResult solve(const StackedSystem& sys, const Eigen::VectorXd& w, Method method) {
  sys.validate();
  WeightedFactorization f(sys.B, w, sys.param_names);
  EstimationResult r;
  r.method = method;
  r.param_names = sys.param_names;
  r.x_hat = f.P * w.cwiseProduct(sys.dp);
  r.covariance = f.sandwich(w, sys.sigma);
  r.ci3 = three_sigma(r.covariance);
  r.residuals = sys.B * r.x_hat - sys.dp;
  r.weights = w;
  r.sigma = sys.sigma;
  r.warnings = std::move(f.warnings);
  r.iterations.push_back({r.x_hat, r.ci3, std::numeric_limits<double>::infinity()});
  return r;
}

double max_relative_change(const Eigen::VectorXd& prev, const Eigen::VectorXd& prev_ci3,
                           const Eigen::VectorXd& next) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < prev.size(); ++i) {
    // Parameters near zero are measured against their standard deviation.
    const double denom = std::max(std::abs(prev[i]), prev_ci3[i] / 3.0);
    const double change = std::abs(next[i] - prev[i]);
    worst = std::max(worst, denom > 0.0 ? change / denom
                                        : (change > 0.0 ? std::numeric_limits<double>::infinity()
                                                        : 0.0));
  }
  return worst;
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::Ols: return "OLS";
    case Method::Wls: return "WLS";
    case Method::Irls: return "IRLS";
  }
  return "?";
}

EstimationResult ols_estimate(const StackedSystem& sys) {
  return solve(sys, Eigen::VectorXd::Ones(sys.rows()), Method::Ols);
}

EstimationResult wls_estimate(const StackedSystem& sys, const WeightMatrix& weights) {
  return solve(sys, weights.w, Method::Wls);
}

WeightMatrix optimal_weights(const Eigen::VectorXd& sigma, double a) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw Error(ErrorCode::InvalidArgument, "weight scale must be positive");
  }
  if (!(sigma.array() > 0.0).all() || !sigma.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
  }
  return {a * sigma.cwiseInverse()};
}

WeightMatrix robust_weights(const Eigen::VectorXd& sigma, double sigma0, double lambda) {
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) {
    throw Error(ErrorCode::InvalidArgument, "sigma0 must be positive");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidArgument, "lambda must be non-negative");
  }
  if ((sigma.array() < 0.0).any() || !sigma.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "sigma must be non-negative");
  }
  return {(sigma0 / (sigma0 + lambda * sigma.array())).matrix()};
}

EstimationResult irls(const StackedSystem& sys, const IrlsOptions& options) {
  if (options.max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 1");
  if (!(options.rel_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "rel_tol must be positive");

  auto step = [&](const Eigen::VectorXd& sigma) {
    EstimationResult r =
        wls_estimate(sys.with_sigma(sigma), robust_weights(sigma, options.sigma0, options.lambda));
    if (options.covariance_from_own_residuals) {
      r.sigma = build_sigma(dispersions_from_residuals(r.residuals, sys.row_tags), sys.row_tags,
                            options.sigma0);
      r.covariance = weighted_sandwich_covariance(sys.B, r.weights, r.sigma);
      r.ci3 = three_sigma(r.covariance);
      r.iterations.front().ci3 = r.ci3;
    }
    return r;
  };

  EstimationResult best = step(sys.sigma);
  std::vector<IterationRecord> trace = best.iterations;
  best.converged = !std::isfinite(options.rel_tol) || options.max_iter == 1;

  for (int iter = 2; iter <= options.max_iter && std::isfinite(options.rel_tol); ++iter) {
    const NoiseModel refreshed = dispersions_from_residuals(best.residuals, sys.row_tags);
    EstimationResult next;
    try {
      next = step(build_sigma(refreshed, sys.row_tags, options.sigma0));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RankDeficient) throw;
      best.diverged = true;
      best.warnings.push_back("reweighting stopped at iteration " + std::to_string(iter) + ": " +
                              e.what());
      break;
    }
    const double change = max_relative_change(best.x_hat, best.ci3, next.x_hat);
    next.iterations.front().max_rel_change = change;
    trace.push_back(next.iterations.front());
    best = std::move(next);
    if (change < options.rel_tol) {
      best.converged = true;
      break;
    }
  }
  best.method = Method::Irls;
  best.iterations = std::move(trace);
  return best;
}

std::vector<std::pair<double, double>> confidence_intervals(const EstimationResult& result) {
  if (result.covariance.rows() != result.x_hat.size()) {
    throw Error(ErrorCode::Internal, "result has no covariance");
  }
  const Eigen::MatrixXd sym = 0.5 * (result.covariance + result.covariance.transpose());
  const Eigen::VectorXd half = three_sigma(sym);
  std::vector<std::pair<double, double>> out;
  for (Eigen::Index i = 0; i < half.size(); ++i) {
    out.emplace_back(result.x_hat[i] - half[i], result.x_hat[i] + half[i]);
  }
  return out;
}

Eigen::VectorXd ci_ratios(const EstimationResult& ols, const EstimationResult& wls) {
  if (ols.ci3.size() != wls.ci3.size()) {
    throw Error(ErrorCode::InvalidArgument, "results have different parameter counts");
  }
  return ols.ci3.cwiseQuotient(wls.ci3);
}

std::vector<bool> nested_intervals(const EstimationResult& outer, const EstimationResult& inner) {
  const auto a = confidence_intervals(outer);
  const auto b = confidence_intervals(inner);
  if (a.size() != b.size()) {
    throw Error(ErrorCode::InvalidArgument, "results have different parameter counts");
  }
  std::vector<bool> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.push_back(b[i].first >= a[i].first && b[i].second <= a[i].second);
  }
  return out;
}

Eigen::MatrixXd iid_covariance(const Eigen::MatrixXd& B, double sigma) {
  WeightedFactorization f(B, Eigen::VectorXd::Ones(B.rows()), default_names(B.cols()));
  return sigma * sigma * f.inverse_information();
}

Eigen::MatrixXd sandwich_covariance(const Eigen::MatrixXd& B, const Eigen::VectorXd& sigma) {
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(B.rows());
  WeightedFactorization f(B, ones, default_names(B.cols()));
  return f.sandwich(ones, sigma);
}

Eigen::MatrixXd weighted_sandwich_covariance(const Eigen::MatrixXd& B, const Eigen::VectorXd& w,
                                             const Eigen::VectorXd& sigma) {
  WeightedFactorization f(B, w, default_names(B.cols()));
  return f.sandwich(w, sigma);
}

Eigen::MatrixXd reduced_covariance(const Eigen::MatrixXd& B, const Eigen::VectorXd& sigma) {
  WeightedFactorization f(B, optimal_weights(sigma).w, default_names(B.cols()));
  return f.inverse_information();
}

}  // namespace robcal
