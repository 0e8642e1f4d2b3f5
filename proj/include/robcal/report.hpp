#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "robcal/estimator.hpp"
#include "robcal/simulator.hpp"

namespace robcal {

/// Display scale for a parameter name: compliances in micro-rad/(N*m),
/// geometric lengths in um and angles in micro-rad.
struct DisplayUnit {
  double scale;  // SI value / scale = display value
  std::string label;
};
DisplayUnit display_unit(const std::string& param_name);

struct ReportOptions {
  bool text = true;     // report.txt
  bool columns = true;  // parameters.tsv, ratios.tsv, trace.tsv
};

/// Rendered report files keyed by file name, in write order.
using ReportFiles = std::vector<std::pair<std::string, std::string>>;

/// Side-by-side estimates; the ratio section appears only when an OLS result
/// and a weighted result are both present. A trace is written for the first
/// result with more than one iteration.
ReportFiles render_report(std::span<const EstimationResult> results,
                          const ReportOptions& options = {});

/// Per-row residuals with their tags, sigma and weight.
std::string render_residuals(const EstimationResult& result, std::span<const RowTag> tags);

std::string render_comparison(const ComparisonReport& report);

/// Writes every file atomically into `dir` (created if absent). On failure
/// files already written by this call are removed.
std::vector<std::filesystem::path> write_files(const std::filesystem::path& dir,
                                               const ReportFiles& files);

std::vector<std::filesystem::path> emit_report(std::span<const EstimationResult> results,
                                               const std::filesystem::path& dir,
                                               const ReportOptions& options = {});

}  // namespace robcal
