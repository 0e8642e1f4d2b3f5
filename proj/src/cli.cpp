#include "robcal/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <algorithm>
#include <map>
#include <sstream>

#include "robcal/error.hpp"
#include "robcal/units.hpp"

namespace robcal::cli {

namespace {

io::ModelFile load_model(const RunConfig& cfg) {
  if (cfg.model) return io::read_model(*cfg.model);
  std::istringstream in(study_model_text());
  return io::parse_model(in, "<study model>");
}

/// One joint vector per configuration id, in id order.
std::vector<JointVector> configurations_of(const std::vector<ExperimentRecord>& records) {
  std::map<int, const JointVector*> by_id;
  for (const auto& r : records) {
    auto [it, fresh] = by_id.try_emplace(r.config, &r.q);
    if (!fresh && (r.q - *it->second).cwiseAbs().maxCoeff() > kBucketTolerance) {
      throw Error(ErrorCode::InvalidArgument,
                  "configuration " + std::to_string(r.config) + " has inconsistent joint angles");
    }
  }
  std::vector<JointVector> out;
  for (const auto& [id, q] : by_id) out.push_back(*q);
  return out;
}

std::string truth_tsv(const StudyDesign& design) {
  const auto names = design.layout().names();
  const Eigen::VectorXd x = design.truth();
  std::string out = "parameter\tvalue\tdisplay_value\tdisplay_unit\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    const DisplayUnit u = display_unit(names[i]);
    const auto k = static_cast<Eigen::Index>(i);
    out += fmt::format("{}\t{}\t{}\t{}\n", names[i], x[k], x[k] / u.scale, u.label);
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (!(sigma0_um > 0.0)) throw Error(ErrorCode::InvalidArgument, "--sigma0 must be > 0");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "--lambda must be >= 0");
  if (!(rel_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "--rel-tol must be > 0");
  if (max_iter < 1) throw Error(ErrorCode::InvalidArgument, "--max-iter must be >= 1");
  if (markers < 1) throw Error(ErrorCode::InvalidArgument, "--markers must be >= 1");
  if (repetitions < 1) throw Error(ErrorCode::InvalidArgument, "--repetitions must be >= 1");
  if (!(mass_kg >= 0.0)) throw Error(ErrorCode::InvalidArgument, "--mass must be >= 0");
  if (command == "compare" && trials < 100) {
    throw Error(ErrorCode::InvalidArgument, "--trials must be >= 100");
  }
  if (command == "calibrate" && !measurements) {
    throw Error(ErrorCode::InvalidArgument, "--measurements is required");
  }
  if (mode != IdentificationMode::Elastostatic && params.empty()) {
    throw Error(ErrorCode::InvalidArgument, "--params is required for geometric identification");
  }
  for (const auto* p : {&model, &measurements, &noise, &configs}) {
    if (*p && !std::filesystem::exists(**p)) {
      throw Error(ErrorCode::Io, "no such file: " + (*p)->string());
    }
  }
}

CalibrationOutcome calibrate(const CalibrationInputs& inputs, const RunConfig& cfg) {
  const ManipulatorModel& model = inputs.model.model;
  ParameterLayout layout;
  layout.mode = cfg.mode;
  if (cfg.mode != IdentificationMode::Geometric) {
    const auto configs = configurations_of(inputs.records);
    layout.compliance = inputs.model.compliance.resolve(configs, model.n_joints());
  }
  for (const auto& name : cfg.params) layout.geometric.push_back(parse_parameter(name));

  const double sigma0 = units::um_to_m(cfg.sigma0_um);
  IrlsOptions irls_options{sigma0, cfg.lambda, cfg.max_iter, cfg.rel_tol, true};

  CalibrationOutcome out;
  if (inputs.noise) {
    out.system = stack_system(inputs.records, model, layout, *inputs.noise, sigma0);
  } else {
    std::vector<int> ids;
    for (const auto& r : inputs.records) ids.push_back(r.config);
    const StackedSystem prior =
        stack_system(inputs.records, model, layout, NoiseModel::uniform(ids, sigma0), sigma0);
    const EstimationResult first = ols_estimate(prior);
    out.system = prior.with_sigma(
        build_sigma(dispersions_from_residuals(first.residuals, prior.row_tags), prior.row_tags,
                    sigma0));
    if (cfg.method == Method::Irls) {
      out.results.push_back(ols_estimate(out.system));
      out.results.push_back(irls(prior, irls_options));
      return out;
    }
  }
  out.results.push_back(ols_estimate(out.system));
  switch (cfg.method) {
    case Method::Ols: break;
    case Method::Wls:
      out.results.push_back(
          wls_estimate(out.system, robust_weights(out.system.sigma, sigma0, cfg.lambda)));
      break;
    case Method::Irls: out.results.push_back(irls(out.system, irls_options)); break;
  }
  return out;
}

StudyDesign design_from(const RunConfig& cfg, const ManipulatorModel& model,
                        const io::ComplianceLayout& layout) {
  StudyDesign d = default_study_design();
  if (cfg.configs) {
    const io::ConfigurationSet set = io::read_configurations(*cfg.configs);
    d.config_ids = set.ids;
    d.configurations = set.q;
  }
  if (cfg.noise) d.noise = io::read_noise(*cfg.noise);
  d.compliance = layout.resolve(d.configurations, model.n_joints());
  if (!cfg.truth.empty()) {
    d.compliance_truth = Eigen::Map<const Eigen::VectorXd>(
                             cfg.truth.data(), static_cast<Eigen::Index>(cfg.truth.size())) *
                         units::kComplianceReport;
  }
  d.markers = cfg.markers;
  d.repetitions = cfg.repetitions;
  d.load.mass_min_kg = d.load.mass_max_kg = cfg.mass_kg;
  d.seed = cfg.seed;
  d.validate(model);
  return d;
}

int run_calibrate(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  CalibrationInputs inputs;
  inputs.model = load_model(cfg);
  inputs.records = io::read_measurements(*cfg.measurements);
  if (cfg.noise) inputs.noise = io::read_noise(*cfg.noise);
  const CalibrationOutcome outcome = calibrate(inputs, cfg);

  ReportFiles files = render_report(outcome.results);
  files.emplace_back("residuals.tsv",
                     render_residuals(outcome.results.back(), outcome.system.row_tags));
  const auto written = write_files(cfg.out, files);
  out << files.front().second;
  for (const auto& p : written) out << "wrote " << p.string() << "\n";
  return 0;
}

int run_simulate(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const io::ModelFile model = load_model(cfg);
  const StudyDesign design = design_from(cfg, model.model, model.compliance);
  const auto records = simulate_measurements(design, model.model);
  const ReportFiles files = {
      {"measurements.tsv", io::format_measurements(records)},
      {"truth.tsv", truth_tsv(design)},
      {"noise.tsv", io::format_noise(design.noise)},
  };
  const auto written = write_files(cfg.out, files);
  out << records.size() << " records, " << 3 * records.size() << " scalar equations\n";
  for (const auto& p : written) out << "wrote " << p.string() << "\n";
  return 0;
}

int run_compare(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const io::ModelFile model = load_model(cfg);
  const StudyDesign design = design_from(cfg, model.model, model.compliance);
  CompareOptions options;
  options.trials = cfg.trials;
  options.irls = {units::um_to_m(cfg.sigma0_um), cfg.lambda, cfg.max_iter, cfg.rel_tol, true};
  options.weighting = cfg.weighting;
  const ComparisonReport report = monte_carlo_compare(design, model.model, options);
  const std::string text = render_comparison(report);
  const auto written = write_files(cfg.out, {{"compare.txt", text}});
  out << text;
  for (const auto& p : written) out << "wrote " << p.string() << "\n";
  return 0;
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) cfg.out = env;

  CLI::App app{"Weighted least-squares calibration of serial manipulators"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Identify parameters from measurements");
  auto* simulate_cmd = app.add_subcommand("simulate", "Generate a synthetic calibration experiment");
  auto* compare_cmd = app.add_subcommand("compare", "Monte Carlo comparison of OLS, WLS and IRLS");

  const std::map<std::string, Method> methods = {
      {"ols", Method::Ols}, {"wls", Method::Wls}, {"irls", Method::Irls}};
  const std::map<std::string, IdentificationMode> modes = {
      {"elastostatic", IdentificationMode::Elastostatic},
      {"geometric", IdentificationMode::Geometric},
      {"combined", IdentificationMode::Combined}};
  const std::map<std::string, WlsWeighting> weightings = {{"robust", WlsWeighting::Robust},
                                                          {"optimal", WlsWeighting::Optimal}};

  std::string model_path, meas_path, noise_path, configs_path;
  const std::string out_help = std::string("Output directory (default $") + kOutDirEnv + " or .)";
  for (auto* sub : {calibrate_cmd, simulate_cmd, compare_cmd}) {
    sub->add_option("--model", model_path, "Model file (default: bundled study robot)");
    sub->add_option("--noise", noise_path, "Noise table, um");
    sub->add_option("--out", cfg.out, out_help);
    sub->add_option("--sigma0", cfg.sigma0_um, "Measurement system precision, um")->capture_default_str();
    sub->add_option("--lambda", cfg.lambda, "Robust weight factor")->capture_default_str();
  }
  calibrate_cmd->add_option("--measurements", meas_path, "Measurement file")->required();
  calibrate_cmd->add_option("--method", cfg.method, "ols | wls | irls")
      ->transform(CLI::CheckedTransformer(methods, CLI::ignore_case))
      ->default_str("wls");
  calibrate_cmd->add_option("--mode", cfg.mode, "elastostatic | geometric | combined")
      ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case))
      ->default_str("elastostatic");
  calibrate_cmd->add_option("--params", cfg.params, "Geometric parameters, e.g. a2 theta3 tool_z")
      ->delimiter(',');
  for (auto* sub : {calibrate_cmd, compare_cmd}) {
    sub->add_option("--rel-tol", cfg.rel_tol, "Reweighting stop: max relative change")->capture_default_str();
    sub->add_option("--max-iter", cfg.max_iter, "Reweighting iteration cap")->capture_default_str();
  }
  for (auto* sub : {simulate_cmd, compare_cmd}) {
    sub->add_option("--configs", configs_path, "Configuration table, deg");
    sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    sub->add_option("--markers", cfg.markers, "Markers per configuration")->capture_default_str();
    sub->add_option("--repetitions", cfg.repetitions, "Repetitions per configuration")->capture_default_str();
    sub->add_option("--mass", cfg.mass_kg, "Load mass, kg")->capture_default_str();
    sub->add_option("--truth", cfg.truth, "Ground-truth compliances, urad/(N*m), comma separated")
        ->delimiter(',');
  }
  compare_cmd->add_option("--trials", cfg.trials, "Monte Carlo trials")->capture_default_str();
  compare_cmd->add_option("--weighting", cfg.weighting, "robust | optimal")
      ->transform(CLI::CheckedTransformer(weightings, CLI::ignore_case))
      ->default_str("robust");

  std::vector<std::string> argv_store = {"robcal"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << code_name(ErrorCode::InvalidArgument) << ": " << msg << "\n";
    return static_cast<int>(ErrorCode::InvalidArgument);
  }

  if (!model_path.empty()) cfg.model = model_path;
  if (!meas_path.empty()) cfg.measurements = meas_path;
  if (!noise_path.empty()) cfg.noise = noise_path;
  if (!configs_path.empty()) cfg.configs = configs_path;

  try {
    if (calibrate_cmd->parsed()) {
      cfg.command = "calibrate";
      return run_calibrate(cfg, out);
    }
    if (simulate_cmd->parsed()) {
      cfg.command = "simulate";
      return run_simulate(cfg, out);
    }
    cfg.command = "compare";
    return run_compare(cfg, out);
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << code_name(e.code()) << ": " << msg << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    err << "error: " << code_name(ErrorCode::Internal) << ": " << e.what() << "\n";
    return static_cast<int>(ErrorCode::Internal);
  }
}

}  // namespace robcal::cli
