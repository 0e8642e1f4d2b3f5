#include <doctest.h>

#include <algorithm>

#include "robcal/estimator.hpp"
#include "robcal/io.hpp"
#include "robcal/report.hpp"
#include "robcal/simulator.hpp"
#include "support.hpp"

using namespace robcal;

namespace {

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

const std::string* find_file(const ReportFiles& f, const std::string& name) {
  for (const auto& [n, c] : f)
    if (n == name) return &c;
  return nullptr;
}

StackedSystem study_system() {
  const auto model = study_model();
  const auto d = default_study_design();
  return stack_system(simulate_measurements(d, model), model, d.layout(), d.noise);
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("display units") {
  CHECK(display_unit("k2_1").scale == 1e-6);
  CHECK(display_unit("d_theta3").label == "urad");
  CHECK(display_unit("d_a2").scale == 1e-6);
  CHECK(display_unit("d_a2").label == "um");
}

TEST_CASE("single parameter result gives two files") {
  StackedSystem s;
  s.B = Eigen::MatrixXd::Ones(3, 1);
  s.dp = Eigen::Vector3d(1, 2, 3);
  s.sigma = Eigen::Vector3d::Ones();
  s.row_tags = {{1, 0, 0, 0}, {1, 0, 0, 1}, {1, 0, 0, 2}};
  s.param_names = {"k1"};
  const std::vector<EstimationResult> r = {ols_estimate(s)};
  const ReportFiles f = render_report(r);
  REQUIRE(f.size() == 2);
  CHECK(f[0].first == "report.txt");
  CHECK(f[1].first == "parameters.tsv");
  CHECK(lines(f[1].second) == 2);
  CHECK(f[0].second.find("Benefit") == std::string::npos);
}

TEST_CASE("ratio section needs both results") {
  const StackedSystem s = study_system();
  const EstimationResult ols = ols_estimate(s);
  const EstimationResult wls = wls_estimate(s, robust_weights(s.sigma, 10e-6, 1.0));
  const std::vector<EstimationResult> both = {ols, wls};
  const ReportFiles f = render_report(both);
  const std::string* ratios = find_file(f, "ratios.tsv");
  REQUIRE(ratios != nullptr);
  CHECK(lines(*ratios) == 10);
  CHECK(f[0].second.find("Benefit of WLS over OLS") != std::string::npos);
  CHECK(lines(*find_file(f, "parameters.tsv")) == 19);
  const std::vector<EstimationResult> one = {wls};
  const ReportFiles g = render_report(one);
  CHECK(find_file(g, "ratios.tsv") == nullptr);
}

TEST_CASE("trace has one row per iteration") {
  const StackedSystem s = study_system();
  IrlsOptions o;
  o.max_iter = 10;
  o.rel_tol = 1e-300;
  const EstimationResult r = irls(s, o);
  REQUIRE(r.iterations.size() == 10);
  const std::vector<EstimationResult> v = {ols_estimate(s), r};
  const ReportFiles f = render_report(v);
  const std::string* trace = find_file(f, "trace.tsv");
  REQUIRE(trace != nullptr);
  CHECK(lines(*trace) == 11);
  CHECK(trace->rfind("iteration\tk2_1\tk2_1_ci_low\tk2_1_ci_high\t", 0) == 0);
}

TEST_CASE("residual table") {
  const StackedSystem s = study_system();
  const EstimationResult r = ols_estimate(s);
  const std::string t = render_residuals(r, s.row_tags);
  CHECK(lines(t) == 811);
  CHECK(t.rfind("config\tmarker\trepetition\taxis", 0) == 0);
}

TEST_CASE("written files and failure cleanup") {
  const auto dir = test::scratch_dir("report_write");
  const ReportFiles f = {{"a.txt", "1\n"}, {"b.txt", "2\n"}};
  const auto written = write_files(dir / "out", f);
  CHECK(written.size() == 2);
  CHECK(io::read_text(dir / "out" / "b.txt") == "2\n");

  std::filesystem::create_directories(dir / "blocked" / "b.txt");
  CHECK_THROWS(write_files(dir / "blocked", f));
  CHECK_FALSE(std::filesystem::exists(dir / "blocked" / "a.txt"));
}

}  // TEST_SUITE
