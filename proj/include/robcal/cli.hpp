#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "robcal/estimator.hpp"
#include "robcal/io.hpp"
#include "robcal/report.hpp"
#include "robcal/simulator.hpp"

namespace robcal::cli {

inline constexpr const char* kOutDirEnv = "ROBCAL_OUT_DIR";

struct RunConfig {
  std::string command;  // calibrate | simulate | compare

  std::optional<std::filesystem::path> model;  // bundled study model when absent
  std::optional<std::filesystem::path> measurements;
  std::optional<std::filesystem::path> noise;
  std::optional<std::filesystem::path> configs;
  std::filesystem::path out = ".";

  Method method = Method::Wls;
  IdentificationMode mode = IdentificationMode::Elastostatic;
  std::vector<std::string> params;  // geometric parameter names
  double sigma0_um = 10.0;
  double lambda = 1.0;
  double rel_tol = 1e-3;
  int max_iter = 20;

  std::uint64_t seed = 1;
  int trials = 500;
  int markers = 3;
  int repetitions = 6;
  double mass_kg = 265.0;
  std::vector<double> truth;  // compliances in micro-rad/(N*m)
  WlsWeighting weighting = WlsWeighting::Robust;

  /// Throws InvalidArgument on out-of-range options or missing inputs.
  void validate() const;
};

struct CalibrationInputs {
  io::ModelFile model;
  std::vector<ExperimentRecord> records;
  std::optional<NoiseModel> noise;
};

struct CalibrationOutcome {
  StackedSystem system;
  /// OLS first, then the requested weighted method when it is not OLS.
  std::vector<EstimationResult> results;
};

/// Without a noise model, OLS covariances and WLS weights use dispersions of
/// the OLS residuals and reweighting starts from uniform weights.
CalibrationOutcome calibrate(const CalibrationInputs& inputs, const RunConfig& cfg);

/// Bundled study design with the overrides from `cfg` applied.
StudyDesign design_from(const RunConfig& cfg, const ManipulatorModel& model,
                        const io::ComplianceLayout& layout);

int run_calibrate(const RunConfig& cfg, std::ostream& out);
int run_simulate(const RunConfig& cfg, std::ostream& out);
int run_compare(const RunConfig& cfg, std::ostream& out);

/// Full command line entry point; args excludes the program name. Errors are
/// reported as one line `error: <CODE>: <message>` on `err`.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace robcal::cli
