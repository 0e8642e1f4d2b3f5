#include "robcal/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "robcal/error.hpp"
#include "robcal/io.hpp"
#include "robcal/units.hpp"

namespace robcal {

namespace {

constexpr const char* kStudyModel = R"(# Representative six-axis heavy-payload arm, modified DH (m, deg).
base x=0 y=0 z=0 rx=0 ry=0 rz=0
joint type=revolute a=0 alpha=0 d=0.675 theta=0
joint type=revolute a=0.35 alpha=-90 d=0 theta=0
joint type=revolute a=1.15 alpha=0 d=0 theta=-90
joint type=revolute a=-0.041 alpha=-90 d=1.2 theta=0
joint type=revolute a=0 alpha=90 d=0 theta=0
joint type=revolute a=0 alpha=-90 d=0 theta=0
tool x=0 y=0 z=0.315 rx=0 ry=0 rz=0
# Three markers on a 200 mm radius plate; the load hangs from marker 1.
marker x=0.2 y=0 z=0
marker x=-0.1 y=0.17320508075688773 z=0
marker x=-0.1 y=-0.17320508075688773 z=0
compliance bucketed=2 tail=3,4,5,6
)";

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct TrialOutcome {
  bool ok = false;
  EstimationResult ols;
  EstimationResult wls;
  std::optional<EstimationResult> irls;
  Eigen::MatrixXd reduced;
};

MethodSummary summarize(const std::vector<const EstimationResult*>& rs) {
  MethodSummary s;
  const auto n = static_cast<double>(rs.size());
  const Eigen::Index p = rs.front()->x_hat.size();
  s.mean = Eigen::VectorXd::Zero(p);
  s.mean_ci3 = Eigen::VectorXd::Zero(p);
  s.mean_analytic_covariance = Eigen::MatrixXd::Zero(p, p);
  for (const auto* r : rs) {
    s.mean += r->x_hat;
    s.mean_ci3 += r->ci3;
    s.mean_analytic_covariance += r->covariance;
  }
  s.mean /= n;
  s.mean_ci3 /= n;
  s.mean_analytic_covariance /= n;
  s.empirical_covariance = Eigen::MatrixXd::Zero(p, p);
  for (const auto* r : rs) {
    const Eigen::VectorXd d = r->x_hat - s.mean;
    s.empirical_covariance += d * d.transpose();
  }
  s.empirical_covariance /= (n - 1.0);
  s.empirical_std = s.empirical_covariance.diagonal().cwiseSqrt();
  return s;
}

}  // namespace

const std::vector<std::vector<double>>& study_configurations_deg() {
  static const std::vector<std::vector<double>> table = {
      {79.20, -0.01, -5.57, 51.00, -97.52, -91.67},
      {63.00, -0.01, -12.22, -56.49, 41.42, 150.55},
      {63.00, -0.01, -47.98, -70.04, -61.55, 177.16},
      {95.00, -25.24, 33.00, 129.69, -98.10, 90.57},
      {95.00, -25.24, -107.01, 109.95, -61.19, 174.21},
      {105.00, -25.24, 14.30, 55.21, 41.26, -152.97},
      {56.60, -56.9, 44.54, -55.11, 41.90, 152.06},
      {56.60, -56.9, 64.73, -129.65, -98.260, -90.55},
      {144.80, -56.9, 104.49, -69.41, 61.67, -6.33},
      {-41.00, -99.85, -91.68, 55.12, 41.53, -152.48},
      {-143.00, -99.85, -32.64, 110.31, -61.47, -6.29},
      {-143.00, -99.85, -72.01, 129.65, -98.09, 90.82},
      {133.00, -140, 147.68, 129.64, -97.90, 90.99},
      {-60.00, -140, 7.59, -110.09, -61.36, -174.09},
      {-60.00, -140, -52.00, -124.89, -41.62, 27.78},
  };
  return table;
}

const std::vector<NoiseTableRow>& study_noise_table() {
  static const std::vector<NoiseTableRow> table = {
      {1, {150, 64, 33}, {1, 1, 1}},   {2, {57, 86, 118}, {4, 8, 15}},
      {3, {97, 70, 44}, {9, 5, 8}},    {4, {28, 19, 35}, {1, 1, 1}},
      {5, {72, 48, 17}, {3, 4, 1}},    {6, {153, 46, 22}, {8, 3, 1}},
      {7, {112, 66, 53}, {6, 3, 4}},   {8, {74, 55, 59}, {5, 3, 1}},
      {9, {80, 63, 102}, {9, 7, 15}},  {10, {69, 73, 79}, {2, 1, 1}},
      {11, {80, 36, 26}, {3, 1, 3}},   {12, {53, 39, 29}, {4, 1, 1}},
      {13, {26, 29, 29}, {1, 1, 1}},   {14, {88, 121, 42}, {4, 1, 1}},
      {15, {90, 52, 50}, {6, 3, 1}},
  };
  return table;
}

const std::vector<double>& study_compliances_report_units() {
  static const std::vector<double> k = {0.287, 0.277, 0.302, 0.293, 0.246,
                                        0.416, 2.786, 3.483, 2.074};
  return k;
}

std::string study_model_text() { return kStudyModel; }

ManipulatorModel study_model() {
  std::istringstream in(kStudyModel);
  return io::parse_model(in, "<study model>").model;
}

StudyDesign default_study_design() {
  StudyDesign d;
  const auto& table = study_configurations_deg();
  for (std::size_t i = 0; i < table.size(); ++i) {
    d.config_ids.push_back(static_cast<int>(i + 1));
    JointVector q(static_cast<Eigen::Index>(table[i].size()));
    for (std::size_t j = 0; j < table[i].size(); ++j) {
      q[static_cast<Eigen::Index>(j)] = units::deg_to_rad(table[i][j]);
    }
    d.configurations.push_back(std::move(q));
  }
  for (const auto& row : study_noise_table()) {
    d.noise.sigma[row.config] = row.mean_um * units::kMicron;
    d.noise.uncertainty[row.config] = row.std_um * units::kMicron;
  }
  d.compliance = ComplianceParameterMap::from_configurations(d.configurations, 1);
  const auto& k = study_compliances_report_units();
  d.compliance_truth = Eigen::Map<const Eigen::VectorXd>(k.data(), static_cast<Eigen::Index>(k.size())) *
                       units::kComplianceReport;
  return d;
}

void StudyDesign::validate(const ManipulatorModel& model) const {
  model.validate();
  if (configurations.empty()) throw Error(ErrorCode::InvalidArgument, "design has no configurations");
  if (config_ids.size() != configurations.size()) {
    throw Error(ErrorCode::InvalidArgument, "configuration ids and angles disagree");
  }
  if (markers < 1 || markers > model.n_markers()) {
    throw Error(ErrorCode::InvalidArgument, "marker count must be in [1, " +
                                                std::to_string(model.n_markers()) + "]");
  }
  if (repetitions < 1) throw Error(ErrorCode::InvalidArgument, "repetitions must be >= 1");
  if (load.attachment_marker < 0 || load.attachment_marker >= model.n_markers()) {
    throw Error(ErrorCode::InvalidArgument, "load attachment marker out of range");
  }
  if (!(load.mass_min_kg >= 0.0) || load.mass_max_kg < load.mass_min_kg) {
    throw Error(ErrorCode::InvalidArgument, "invalid load mass range");
  }
  for (std::size_t i = 0; i < configurations.size(); ++i) {
    if (configurations[i].size() != model.n_joints() || !configurations[i].allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "configuration " + std::to_string(config_ids[i]) +
                                                  " does not match the model");
    }
    if (!noise.contains(config_ids[i])) {
      throw Error(ErrorCode::MissingNoise,
                  "no noise entry for configuration " + std::to_string(config_ids[i]));
    }
  }
  compliance.validate(model.n_joints());
  if (compliance_truth.size() != compliance.n_params()) {
    throw Error(ErrorCode::InvalidArgument, "compliance truth has the wrong length");
  }
  if (!(compliance_truth.array() > 0.0).all()) {
    throw Error(ErrorCode::InvalidArgument, "compliances must be positive");
  }
  if (geometric_truth.size() != static_cast<Eigen::Index>(geometric.size())) {
    throw Error(ErrorCode::InvalidArgument, "geometric truth has the wrong length");
  }
  if (outlier_fraction < 0.0 || outlier_fraction > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "outlier fraction must be in [0, 1]");
  }
}

ParameterLayout StudyDesign::layout() const {
  ParameterLayout l;
  l.mode = geometric.empty() ? IdentificationMode::Elastostatic : IdentificationMode::Combined;
  l.compliance = compliance;
  l.geometric = geometric;
  return l;
}

Eigen::VectorXd StudyDesign::truth() const {
  Eigen::VectorXd x(geometric_truth.size() + compliance_truth.size());
  x << geometric_truth, compliance_truth;
  return x;
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
  return splitmix64(seed ^ splitmix64(trial));
}

std::vector<ExperimentRecord> simulate_measurements(const StudyDesign& design,
                                                    const ManipulatorModel& model) {
  design.validate(model);
  std::mt19937_64 rng(design.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto noise = [&](const Eigen::Vector3d& sigma) {
    Eigen::Vector3d n;
    for (int a = 0; a < 3; ++a) {
      const bool outlier = design.outlier_fraction > 0.0 && unit(rng) < design.outlier_fraction;
      n[a] = gauss(rng) * sigma[a] * (outlier ? design.outlier_scale : 1.0);
    }
    return n;
  };

  std::vector<ExperimentRecord> out;
  out.reserve(design.configurations.size() * static_cast<std::size_t>(design.markers * design.repetitions));
  for (std::size_t c = 0; c < design.configurations.size(); ++c) {
    const JointVector& q = design.configurations[c];
    const int config = design.config_ids[c];
    const double mass = design.load.mass_max_kg > design.load.mass_min_kg
                            ? design.load.mass_min_kg +
                                  unit(rng) * (design.load.mass_max_kg - design.load.mass_min_kg)
                            : design.load.mass_min_kg;
    const Wrench wrench = gravity_wrench(mass, design.load.attachment_marker);
    const Eigen::Vector3d per_position = design.noise.sigma.at(config) / std::sqrt(2.0);
    for (int m = 0; m < design.markers; ++m) {
      Eigen::Vector3d nominal = forward_kinematics(model, q, m).position;
      if (!design.geometric.empty()) {
        nominal += geometric_regressor(model, q, m, design.geometric) * design.geometric_truth;
      }
      const Eigen::Vector3d deflection =
          elastostatic_regressor(model, q, wrench, design.compliance, m) * design.compliance_truth;
      for (int r = 0; r < design.repetitions; ++r) {
        ExperimentRecord rec;
        rec.config = config;
        rec.marker = m;
        rec.repetition = r;
        rec.q = q;
        rec.wrench = wrench;
        rec.p0 = nominal + noise(per_position);
        rec.p = nominal + deflection + noise(per_position);
        out.push_back(std::move(rec));
      }
    }
  }
  return out;
}

ComparisonReport monte_carlo_compare(const StudyDesign& design, const ManipulatorModel& model,
                                     const CompareOptions& options) {
  if (options.trials < 100) throw Error(ErrorCode::InvalidArgument, "at least 100 trials required");
  design.validate(model);
  const ParameterLayout layout = design.layout();

  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(options.trials));
  auto run_trial = [&](int t) {
    TrialOutcome& o = outcomes[static_cast<std::size_t>(t)];
    try {
      StudyDesign d = design;
      d.seed = trial_seed(design.seed, static_cast<std::uint64_t>(t));
      const auto records = simulate_measurements(d, model);
      const StackedSystem sys = stack_system(records, model, layout, d.noise);
      o.ols = ols_estimate(sys);
      const WeightMatrix w = options.weighting == WlsWeighting::Optimal
                                 ? optimal_weights(sys.sigma)
                                 : robust_weights(sys.sigma, options.irls.sigma0, options.irls.lambda);
      o.wls = wls_estimate(sys, w);
      o.reduced = reduced_covariance(sys.B, sys.sigma);
      if (options.run_irls) {
        // Reweighting starts from uniform weights, as a calibration without
        // prior noise knowledge would, and reports data-driven covariances.
        IrlsOptions irls_options = options.irls;
        irls_options.covariance_from_own_residuals = true;
        o.irls = irls(sys.with_sigma(Eigen::VectorXd::Constant(sys.rows(), options.irls.sigma0)),
                      irls_options);
      }
      o.ok = true;
    } catch (const Error&) {
      o.ok = false;
    }
  };

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp(threads, 1u, static_cast<unsigned>(options.trials));
  if (threads == 1) {
    for (int t = 0; t < options.trials; ++t) run_trial(t);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (int t = static_cast<int>(w); t < options.trials; t += static_cast<int>(threads)) {
          run_trial(t);
        }
      });
    }
  }

  ComparisonReport rep;
  rep.param_names = layout.names();
  rep.truth = design.truth();
  rep.trials = options.trials;
  rep.failed_trials = static_cast<int>(
      std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return !o.ok; }));
  if (rep.failed_trials * 20 > options.trials) {
    throw Error(ErrorCode::Internal, std::to_string(rep.failed_trials) + " of " +
                                         std::to_string(options.trials) + " trials failed");
  }
  std::vector<const EstimationResult*> ols_runs, wls_runs, irls_runs;
  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    ols_runs.push_back(&o.ols);
    wls_runs.push_back(&o.wls);
    if (o.irls) irls_runs.push_back(&*o.irls);
  }
  rep.ols = summarize(ols_runs);
  rep.wls = summarize(wls_runs);

  const Eigen::Index p = rep.truth.size();
  rep.reduced_covariance = Eigen::MatrixXd::Zero(p, p);
  rep.nested_fraction = Eigen::VectorXd::Zero(p);
  int ok = 0;
  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    ++ok;
    rep.reduced_covariance += o.reduced;
    const auto nested = nested_intervals(o.ols, o.wls);
    for (Eigen::Index i = 0; i < p; ++i) rep.nested_fraction[i] += nested[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  }
  rep.reduced_covariance /= ok;
  rep.nested_fraction /= ok;
  rep.ci_ratio = rep.ols.mean_ci3.cwiseQuotient(rep.wls.mean_ci3);
  rep.empirical_ratio = rep.ols.empirical_std.cwiseQuotient(rep.wls.empirical_std);

  if (options.run_irls) {
    std::size_t longest = 0;
    for (const auto& o : outcomes) {
      if (!o.ok) continue;
      longest = std::max(longest, o.irls->iterations.size());
      rep.irls_iterations.push_back(static_cast<int>(o.irls->iterations.size()));
    }
    rep.trace_mean.assign(longest, Eigen::VectorXd::Zero(p));
    rep.trace_ci3_mean.assign(longest, Eigen::VectorXd::Zero(p));
    for (const auto* r : irls_runs) {
      const auto& it = r->iterations;
      for (std::size_t k = 0; k < longest; ++k) {
        const auto& rec = it[std::min(k, it.size() - 1)];
        rep.trace_mean[k] += rec.x_hat / ok;
        rep.trace_ci3_mean[k] += rec.ci3 / ok;
      }
    }
    rep.irls = summarize(irls_runs);
  }
  return rep;
}

}  // namespace robcal
