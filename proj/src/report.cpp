#include "robcal/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "robcal/error.hpp"
#include "robcal/io.hpp"
#include "robcal/units.hpp"

namespace robcal {

namespace {

constexpr const char* kAxes = "xyz";

const EstimationResult* find_method(std::span<const EstimationResult> results, bool want_ols) {
  for (const auto& r : results) {
    if ((r.method == Method::Ols) == want_ols) return &r;
  }
  return nullptr;
}

std::string percent(double ci3, double x) {
  return x != 0.0 ? fmt::format("{:.2f}%", 100.0 * ci3 / std::abs(x)) : std::string("-");
}

std::string parameter_table(std::span<const EstimationResult> results) {
  const auto& names = results.front().param_names;
  std::string out = "Identified parameters (estimate +/- 3 sigma)\n\n";
  out += fmt::format("{:<16}", "parameter");
  for (const auto& r : results) out += fmt::format("  {:>28}", method_name(r.method));
  out += fmt::format("  {}\n", "unit");
  for (std::size_t i = 0; i < names.size(); ++i) {
    const DisplayUnit u = display_unit(names[i]);
    out += fmt::format("{:<16}", names[i]);
    for (const auto& r : results) {
      const auto k = static_cast<Eigen::Index>(i);
      out += fmt::format("  {:>28}", fmt::format("{:.4g} +/- {:.4g}", r.x_hat[k] / u.scale,
                                                  r.ci3[k] / u.scale));
    }
    out += fmt::format("  {}\n", u.label);
  }
  return out;
}

std::string ratio_table(const EstimationResult& ols, const EstimationResult& weighted) {
  const Eigen::VectorXd ratio = ci_ratios(ols, weighted);
  const auto nested = nested_intervals(ols, weighted);
  std::string out = fmt::format("\nBenefit of {} over OLS\n\n", method_name(weighted.method));
  out += fmt::format("{:<16}  {:>12}  {:>10}  {:>10}  {:>10}\n", "parameter", "CI location",
                     "CI_OLS", fmt::format("CI_{}", method_name(weighted.method)), "ratio");
  for (std::size_t i = 0; i < ols.param_names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out += fmt::format("{:<16}  {:>12}  {:>10}  {:>10}  {:>10.1f}\n", ols.param_names[i],
                       nested[i] ? "inside" : "overlapping", percent(ols.ci3[k], ols.x_hat[k]),
                       percent(weighted.ci3[k], weighted.x_hat[k]), ratio[k]);
  }
  return out;
}

std::string parameters_tsv(std::span<const EstimationResult> results) {
  std::string out = "method\tparameter\testimate\tci3\tci_low\tci_high\n";
  for (const auto& r : results) {
    const auto ci = confidence_intervals(r);
    for (std::size_t i = 0; i < r.param_names.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", method_name(r.method), r.param_names[i],
                         r.x_hat[k], r.ci3[k], ci[i].first, ci[i].second);
    }
  }
  return out;
}

std::string ratios_tsv(const EstimationResult& ols, const EstimationResult& weighted) {
  const Eigen::VectorXd ratio = ci_ratios(ols, weighted);
  const auto nested = nested_intervals(ols, weighted);
  std::string out = "parameter\tci3_ols\tci3_weighted\tratio\tnested\n";
  for (std::size_t i = 0; i < ols.param_names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out += fmt::format("{}\t{}\t{}\t{}\t{}\n", ols.param_names[i], ols.ci3[k], weighted.ci3[k],
                       ratio[k], nested[i] ? 1 : 0);
  }
  return out;
}

std::string trace_tsv(const EstimationResult& r) {
  std::string out = "iteration";
  for (const auto& n : r.param_names) out += fmt::format("\t{0}\t{0}_ci_low\t{0}_ci_high", n);
  out += "\tmax_rel_change\n";
  for (std::size_t it = 0; it < r.iterations.size(); ++it) {
    const auto& rec = r.iterations[it];
    out += std::to_string(it + 1);
    for (Eigen::Index k = 0; k < rec.x_hat.size(); ++k) {
      out += fmt::format("\t{}\t{}\t{}", rec.x_hat[k], rec.x_hat[k] - rec.ci3[k],
                         rec.x_hat[k] + rec.ci3[k]);
    }
    out += fmt::format("\t{}\n", rec.max_rel_change);
  }
  return out;
}

std::string trace_text(const EstimationResult& r) {
  std::string out = fmt::format("\nReweighting trace ({} iterations, {})\n\n", r.iterations.size(),
                                r.diverged ? "stopped on rank loss"
                                           : (r.converged ? "converged" : "not converged"));
  out += fmt::format("{:>9}  {:>14}", "iteration", "max change");
  const std::string& first = r.param_names.front();
  out += fmt::format("  {:>28}\n", first);
  const DisplayUnit u = display_unit(first);
  for (std::size_t it = 0; it < r.iterations.size(); ++it) {
    const auto& rec = r.iterations[it];
    out += fmt::format("{:>9}  {:>14.3e}  {:>28}\n", it + 1, rec.max_rel_change,
                       fmt::format("{:.4g} +/- {:.4g}", rec.x_hat[0] / u.scale, rec.ci3[0] / u.scale));
  }
  return out;
}

}  // namespace

DisplayUnit display_unit(const std::string& name) {
  if (name.starts_with("k")) return {units::kComplianceReport, "urad/(N*m)"};
  if (name.starts_with("d_alpha") || name.starts_with("d_theta")) return {1e-6, "urad"};
  if (name.starts_with("d_")) return {units::kMicron, "um"};
  return {1.0, "SI"};
}

ReportFiles render_report(std::span<const EstimationResult> results, const ReportOptions& options) {
  if (results.empty()) throw Error(ErrorCode::InvalidArgument, "no results to report");
  for (const auto& r : results) {
    if (r.param_names != results.front().param_names || r.x_hat.size() != r.ci3.size() ||
        static_cast<std::size_t>(r.x_hat.size()) != r.param_names.size()) {
      throw Error(ErrorCode::InvalidArgument, "results are incomplete or disagree on parameters");
    }
  }
  const EstimationResult* ols = find_method(results, true);
  const EstimationResult* weighted = find_method(results, false);
  const bool with_ratio = ols && weighted;
  const EstimationResult* traced = nullptr;
  for (const auto& r : results) {
    if (r.iterations.size() > 1) {
      traced = &r;
      break;
    }
  }

  ReportFiles files;
  if (options.text) {
    std::string text = parameter_table(results);
    if (with_ratio) text += ratio_table(*ols, *weighted);
    if (traced) text += trace_text(*traced);
    for (const auto& r : results) {
      for (const auto& w : r.warnings) text += fmt::format("\nwarning ({}): {}\n", method_name(r.method), w);
    }
    files.emplace_back("report.txt", std::move(text));
  }
  if (options.columns) {
    files.emplace_back("parameters.tsv", parameters_tsv(results));
    if (with_ratio) files.emplace_back("ratios.tsv", ratios_tsv(*ols, *weighted));
    if (traced) files.emplace_back("trace.tsv", trace_tsv(*traced));
  }
  return files;
}

std::string render_residuals(const EstimationResult& result, std::span<const RowTag> tags) {
  if (static_cast<std::size_t>(result.residuals.size()) != tags.size()) {
    throw Error(ErrorCode::InvalidArgument, "residual/tag length mismatch");
  }
  std::string out = "config\tmarker\trepetition\taxis\tresidual_um\tsigma_um\tweight\n";
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", tags[i].config, tags[i].marker + 1,
                       tags[i].repetition + 1, kAxes[tags[i].axis],
                       units::m_to_um(result.residuals[k]), units::m_to_um(result.sigma[k]),
                       result.weights[k]);
  }
  return out;
}

std::string render_comparison(const ComparisonReport& rep) {
  std::string out = fmt::format("Monte Carlo comparison: {} trials ({} failed)\n\n", rep.trials,
                                rep.failed_trials);
  out += "parameter\ttruth\tmean_ols\tstd_ols\tmean_ci3_ols\tmean_wls\tstd_wls\tmean_ci3_wls"
         "\tci_ratio\tstd_ratio\tnested_fraction";
  if (rep.irls) out += "\tmean_irls\tstd_irls\tmean_ci3_irls";
  out += "\n";
  for (std::size_t i = 0; i < rep.param_names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}", rep.param_names[i],
                       rep.truth[k], rep.ols.mean[k], rep.ols.empirical_std[k],
                       rep.ols.mean_ci3[k], rep.wls.mean[k], rep.wls.empirical_std[k],
                       rep.wls.mean_ci3[k], rep.ci_ratio[k], rep.empirical_ratio[k],
                       rep.nested_fraction[k]);
    if (rep.irls) {
      out += fmt::format("\t{}\t{}\t{}", rep.irls->mean[k], rep.irls->empirical_std[k],
                         rep.irls->mean_ci3[k]);
    }
    out += "\n";
  }
  out += fmt::format("\ntrace_ols_empirical\t{}\ntrace_ols_analytic\t{}\n",
                     rep.ols.empirical_covariance.trace(), rep.ols.mean_analytic_covariance.trace());
  out += fmt::format("trace_wls_empirical\t{}\ntrace_wls_analytic\t{}\ntrace_reduced\t{}\n",
                     rep.wls.empirical_covariance.trace(), rep.wls.mean_analytic_covariance.trace(),
                     rep.reduced_covariance.trace());
  if (!rep.trace_mean.empty()) {
    out += "\niteration";
    for (const auto& n : rep.param_names) out += fmt::format("\t{0}\t{0}_ci3", n);
    out += "\n";
    for (std::size_t it = 0; it < rep.trace_mean.size(); ++it) {
      out += std::to_string(it + 1);
      for (Eigen::Index k = 0; k < rep.trace_mean[it].size(); ++k) {
        out += fmt::format("\t{}\t{}", rep.trace_mean[it][k], rep.trace_ci3_mean[it][k]);
      }
      out += "\n";
    }
  }
  return out;
}

std::vector<std::filesystem::path> write_files(const std::filesystem::path& dir,
                                               const ReportFiles& files) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::Io, "cannot create output directory " + dir.string());
  }
  std::vector<std::filesystem::path> written;
  try {
    for (const auto& [name, content] : files) {
      io::write_atomic(dir / name, content);
      written.push_back(dir / name);
    }
  } catch (const Error&) {
    for (const auto& p : written) std::filesystem::remove(p, ec);
    throw;
  }
  return written;
}

std::vector<std::filesystem::path> emit_report(std::span<const EstimationResult> results,
                                               const std::filesystem::path& dir,
                                               const ReportOptions& options) {
  return write_files(dir, render_report(results, options));
}

}  // namespace robcal
