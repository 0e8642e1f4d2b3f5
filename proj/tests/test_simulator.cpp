#include <doctest.h>

#include <array>

#include "robcal/error.hpp"
#include "robcal/estimator.hpp"
#include "robcal/simulator.hpp"
#include "support.hpp"

using namespace robcal;
using robcal::test::rel_err;

namespace {

StudyDesign quiet_design() {
  StudyDesign d = default_study_design();
  for (auto& [id, s] : d.noise.sigma) s.setZero();
  return d;
}

StudyDesign homoscedastic_design(double sigma) {
  StudyDesign d = default_study_design();
  d.noise = NoiseModel::uniform(d.config_ids, sigma);
  return d;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const auto n = static_cast<Eigen::Index>(a.size());
  const Eigen::Map<const Eigen::VectorXd> x(a.data(), n), y(b.data(), n);
  const Eigen::VectorXd xc = x.array() - x.mean(), yc = y.array() - y.mean();
  return xc.dot(yc) / (xc.norm() * yc.norm());
}

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("study constants") {
  CHECK(study_configurations_deg().size() == 15);
  CHECK(study_noise_table().size() == 15);
  CHECK(study_noise_table().front().mean_um == Eigen::Vector3d(150, 64, 33));
  CHECK(study_compliances_report_units().size() == 9);
  const auto d = default_study_design();
  CHECK(d.markers == 3);
  CHECK(d.repetitions == 6);
  CHECK(d.noise.sigma.at(1).x() == doctest::Approx(150e-6));
  CHECK(d.compliance_truth[0] == doctest::Approx(0.287e-6));
}

TEST_CASE("no noise and no load leaves positions unchanged") {
  StudyDesign d = quiet_design();
  d.load.mass_min_kg = d.load.mass_max_kg = 0.0;
  for (const auto& r : simulate_measurements(d, study_model())) CHECK(r.p == r.p0);
}

TEST_CASE("noise free study is recovered exactly") {
  const StudyDesign d = quiet_design();
  const auto model = study_model();
  const auto records = simulate_measurements(d, model);
  const StackedSystem sys = stack_system(records, model, d.layout(), default_study_design().noise);
  CHECK(rel_err(ols_estimate(sys).x_hat, d.truth()) < 1e-10);
}

TEST_CASE("geometric errors are recovered with the compliances") {
  StudyDesign d = quiet_design();
  d.geometric = {parse_parameter("a2"), parse_parameter("theta3"), parse_parameter("d4")};
  d.geometric_truth = Eigen::Vector3d(200e-6, 1e-4, -150e-6);
  const auto model = study_model();
  const auto records = simulate_measurements(d, model);
  const StackedSystem sys = stack_system(records, model, d.layout(), default_study_design().noise);
  CHECK(sys.cols() == 12);
  CHECK(sys.param_names.front() == "d_a2");
  CHECK(rel_err(ols_estimate(sys).x_hat, d.truth()) < 1e-10);
}

TEST_CASE("record counts") {
  StudyDesign d = default_study_design();
  CHECK(simulate_measurements(d, study_model()).size() == 270);
  d.markers = 1;
  d.repetitions = 1;
  CHECK(simulate_measurements(d, study_model()).size() == 15);
  d.markers = 4;
  CHECK_THROWS_AS(simulate_measurements(d, study_model()), Error);
}

TEST_CASE("same seed same records") {
  StudyDesign d = default_study_design();
  d.seed = 7;
  const auto a = simulate_measurements(d, study_model());
  const auto b = simulate_measurements(d, study_model());
  d.seed = 8;
  const auto c = simulate_measurements(d, study_model());
  REQUIRE(a.size() == b.size());
  bool all_same = true, any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    all_same = all_same && a[i].p == b[i].p && a[i].p0 == b[i].p0;
    any_diff = any_diff || a[i].p != c[i].p;
  }
  CHECK(all_same);
  CHECK(any_diff);
  CHECK(trial_seed(1, 0) == trial_seed(1, 0));
  CHECK(trial_seed(1, 0) != trial_seed(1, 1));
  CHECK(trial_seed(1, 0) != trial_seed(2, 0));
}

TEST_CASE("noise draws are mutually uncorrelated") {
  StudyDesign d = homoscedastic_design(50e-6);
  d.load.mass_min_kg = d.load.mass_max_kg = 0.0;
  const auto model = study_model();
  // streams: p0 xyz, p xyz, and the p0 x of the next repetition / next marker
  std::array<std::vector<double>, 6> s;
  std::vector<double> rep_a, rep_b, mk_a, mk_b;
  for (std::uint64_t t = 0; s[0].size() < 10000; ++t) {
    d.seed = trial_seed(123, t);
    const auto recs = simulate_measurements(d, model);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto& r = recs[i];
      const Eigen::Vector3d nominal = forward_kinematics(model, r.q, r.marker).position;
      for (int a = 0; a < 3; ++a) {
        s[static_cast<std::size_t>(a)].push_back(r.p0[a] - nominal[a]);
        s[static_cast<std::size_t>(a + 3)].push_back(r.p[a] - nominal[a]);
      }
      if (r.repetition + 1 < d.repetitions) {
        rep_a.push_back(r.p0.x() - nominal.x());
        rep_b.push_back(recs[i + 1].p0.x() - nominal.x());
      }
      if (r.marker + 1 < d.markers) {
        const auto& o = recs[i + static_cast<std::size_t>(d.repetitions)];
        mk_a.push_back(r.p0.x() - nominal.x());
        mk_b.push_back(o.p0.x() - forward_kinematics(model, o.q, o.marker).position.x());
      }
    }
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j) worst = std::max(worst, std::abs(correlation(s[i], s[j])));
  worst = std::max(worst, std::abs(correlation(rep_a, rep_b)));
  worst = std::max(worst, std::abs(correlation(mk_a, mk_b)));
  CHECK(worst < 0.1);
  // each position carries sigma / sqrt(2)
  const Eigen::Map<const Eigen::VectorXd> x(s[0].data(), static_cast<Eigen::Index>(s[0].size()));
  const double sd = std::sqrt((x.array() - x.mean()).square().sum() / double(x.size() - 1));
  CHECK(sd == doctest::Approx(50e-6 / std::sqrt(2.0)).epsilon(0.03));
}

TEST_CASE("estimates are unbiased") {
  CompareOptions o;
  o.trials = 200;
  o.run_irls = false;
  const auto d = default_study_design();
  const ComparisonReport r = monte_carlo_compare(d, study_model(), o);
  CHECK(r.failed_trials == 0);
  const double se_scale = 1.0 / std::sqrt(double(o.trials));
  for (Eigen::Index i = 0; i < r.truth.size(); ++i) {
    CHECK(std::abs(r.ols.mean[i] - r.truth[i]) < 3.0 * r.ols.empirical_std[i] * se_scale);
    CHECK(std::abs(r.wls.mean[i] - r.truth[i]) < 3.0 * r.wls.empirical_std[i] * se_scale);
  }
}

TEST_CASE("homoscedastic noise gives no weighting benefit") {
  CompareOptions o;
  o.trials = 200;
  o.run_irls = false;
  const ComparisonReport r = monte_carlo_compare(homoscedastic_design(60e-6), study_model(), o);
  for (Eigen::Index i = 0; i < r.truth.size(); ++i) {
    CHECK(r.ols.empirical_std[i] == doctest::Approx(r.wls.empirical_std[i]).epsilon(0.05));
  }
}

TEST_CASE("homoscedastic reweighting barely moves the estimate") {
  StudyDesign d = homoscedastic_design(kDefaultSigmaFloor);
  const auto model = study_model();
  int small = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    d.seed = trial_seed(5, static_cast<std::uint64_t>(t));
    const auto sys = stack_system(simulate_measurements(d, model), model, d.layout(), d.noise);
    IrlsOptions o;
    o.max_iter = 2;
    o.rel_tol = 1e-12;
    const EstimationResult r = irls(sys, o);
    REQUIRE(r.iterations.size() == 2);
    CHECK(r.weights.maxCoeff() / r.weights.minCoeff() < 1.5);
    const Eigen::VectorXd change = (r.iterations[1].x_hat - r.iterations[0].x_hat)
                                       .cwiseQuotient(r.iterations[0].x_hat.cwiseAbs());
    if (change.cwiseAbs().maxCoeff() < 1e-3) ++small;
  }
  CHECK(small >= trials * 9 / 10);
}

TEST_CASE("comparison does not depend on the thread count") {
  CompareOptions o;
  o.trials = 100;
  o.threads = 1;
  const auto d = default_study_design();
  const ComparisonReport a = monte_carlo_compare(d, study_model(), o);
  o.threads = 3;
  const ComparisonReport b = monte_carlo_compare(d, study_model(), o);
  CHECK(a.ols.mean == b.ols.mean);
  CHECK(a.wls.empirical_covariance == b.wls.empirical_covariance);
  CHECK(a.irls->mean == b.irls->mean);
  CHECK(a.irls_iterations == b.irls_iterations);
  o.trials = 99;
  CHECK_THROWS_AS(monte_carlo_compare(d, study_model(), o), Error);
}

}  // TEST_SUITE
