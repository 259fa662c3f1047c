#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cli/commands.hpp"
#include "robreg/errors.hpp"
#include "robreg/oracle.hpp"

namespace {

using namespace robreg;
using namespace robreg::cli;

// Synthetic data with beta = (0, 0) and sigma = 1, written to a temporary CSV.
std::string synthetic_csv(const std::string& name, int n) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal;
  out << "x,y\n";
  for (int i = 0; i < n; ++i) out << normal(rng) << ',' << normal(rng) << '\n';
  return path.string();
}

HmcConfig quick_hmc() {
  HmcConfig c;
  c.warmup = 500;
  c.samples = 3000;
  c.chains = 2;
  return c;
}

TEST(Parse, Priors) {
  EXPECT_FALSE(parse_prior("flat").has_value());
  const auto n = parse_prior("normal,2,0.5");
  ASSERT_TRUE(n);
  EXPECT_EQ(n->location, 2.0);
  EXPECT_EQ(n->scale, 0.5);
  EXPECT_EQ(n->family.tag(), "normal");
  EXPECT_EQ(parse_prior("student,0,1")->family.label(), "student(4)");
  EXPECT_EQ(parse_prior("student:10,0,1")->family.label(), "student(10)");
  EXPECT_EQ(parse_prior("lptn,0,1")->family.label(), "lptn(0.95)");
  EXPECT_EQ(parse_prior("ctn:0.9,0,1")->family.label(), "ctn(0.9)");
  EXPECT_THROW(parse_prior("laplace,0,1"), ConfigError);
  EXPECT_THROW(parse_prior("normal,0"), ConfigError);
  EXPECT_THROW(parse_prior("normal,zero,1"), ConfigError);
  EXPECT_THROW(parse_prior("normal:3,0,1"), ConfigError);
  EXPECT_THROW(parse_prior("flat,1"), ConfigError);
  EXPECT_THROW(parse_prior("lptn:0.5,0,1"), DomainError);
  EXPECT_THROW(parse_prior("normal,0,-1"), DomainError);
}

TEST(Parse, SigmaPriors) {
  EXPECT_TRUE(parse_sigma_prior("jeffreys").is_jeffreys());
  const auto ig = parse_sigma_prior("inverse-gamma:2,3").inverse_gamma_base();
  ASSERT_TRUE(ig);
  EXPECT_EQ(ig->shape, 2.0);
  EXPECT_EQ(ig->scale, 3.0);
  EXPECT_THROW(parse_sigma_prior("gamma:1,1"), ConfigError);
  EXPECT_THROW(parse_sigma_prior("inverse-gamma:1"), ConfigError);
}

TEST(Parse, Grids) {
  EXPECT_EQ(parse_grid("0:1:0.5"), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(parse_grid("0.02:0.1:0.04"), (std::vector<double>{0.02, 0.06, 0.1}));
  const auto g = parse_grid("0.02:2:0.04");
  EXPECT_EQ(g.size(), 51u);
  EXPECT_NEAR(g[49], 1.98, 1e-12);
  EXPECT_EQ(g.back(), 2.0);
  EXPECT_EQ(parse_grid("1,3,2"), (std::vector<double>{1.0, 3.0, 2.0}));
  EXPECT_THROW(parse_grid("0:1"), ConfigError);
  EXPECT_THROW(parse_grid("1:0:0.1"), ConfigError);
  EXPECT_THROW(parse_grid(""), ConfigError);
  const auto opt = parse_check_grids("pointwise=1e2:1e4,quadrature=1:10");
  EXPECT_EQ(opt.pointwise_grid, (std::vector<double>{1e2, 1e3, 1e4}));
  EXPECT_EQ(opt.quadrature_grid, (std::vector<double>{1.0, 10.0}));
  EXPECT_THROW(parse_check_grids("other=1:10"), ConfigError);
}

TEST(Sweep, DefaultGrids) {
  const auto mu = default_grid(SweepAxis::mu2);
  EXPECT_EQ(mu.size(), 41u);
  EXPECT_EQ(mu.front(), 0.0);
  EXPECT_NEAR(mu.back(), 2.0, 1e-12);
  const auto lambda = default_grid(SweepAxis::lambda2);
  EXPECT_EQ(lambda.front(), 0.02);
  EXPECT_EQ(lambda.back(), 2.0);
}

TEST(Sweep, FamilyResolution) {
  SweepOptions opt;
  opt.families = {"student", "lptn"};
  opt.hyper = {"student=1,10"};
  const auto f = resolve_families(opt);
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f[0].label(), "student(1)");
  EXPECT_EQ(f[1].label(), "student(10)");
  EXPECT_EQ(f[2].label(), "lptn(0.95)");
  opt.families = {"cauchy"};
  EXPECT_THROW(resolve_families(opt), ConfigError);
  opt.families = {"lptn"};
  opt.hyper = {"ctn=0.9"};
  EXPECT_THROW(resolve_families(opt), ConfigError);
}

TEST(Sweep, NormalAndJeffreysColumns) {
  SweepOptions opt;
  opt.families = {"jeffreys", "normal"};
  opt.grid = {0.0, 0.5, 1.0, 2.0};
  const auto rows = run_sweep(opt);
  ASSERT_EQ(rows.size(), 8u);
  for (const auto& r : rows) {
    if (r.family == "normal") {
      EXPECT_NEAR(r.mean, r.axis_value / 2.0, 1e-9);
    } else {
      EXPECT_NEAR(r.mean, 0.0, 1e-9);
      EXPECT_NEAR(r.sd, std::sqrt(1.0 / 97.0), 1e-9);
    }
  }
}

TEST(Sweep, CtnAndCorrectedCtnAgree) {
  SweepOptions opt;
  opt.axis = SweepAxis::lambda2;
  opt.families = {"ctn", "ctn_corrected"};
  opt.grid = {0.1, 0.5, 1.0, 2.0};
  const auto rows = run_sweep(opt);
  for (std::size_t i = 0; i + 1 < rows.size(); i += 2) {
    EXPECT_EQ(rows[i].axis_value, rows[i + 1].axis_value);
    EXPECT_LT(std::abs(rows[i].mean - rows[i + 1].mean), 0.01) << rows[i].axis_value;
  }
}

TEST(Sweep, CsvIsDeterministicAndCommented) {
  SweepOptions opt;
  opt.families = {"lptn", "student"};
  opt.grid = {0.0, 1.0};
  opt.threads = 2;
  std::ostringstream a;
  std::ostringstream b;
  write_sweep_csv(a, opt.axis, run_sweep(opt), {"axis=mu2"});
  opt.threads = 1;
  write_sweep_csv(b, opt.axis, run_sweep(opt), {"axis=mu2"});
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().rfind("# axis=mu2\nmu2,family,mean,sd\n", 0), 0u);
}

TEST(Sweep, HmcMethodAgreesWithQuadrature) {
  SweepOptions opt;
  opt.families = {"lptn"};
  opt.grid = {1.0};
  const auto quad = run_sweep(opt);
  opt.method = SweepMethod::hmc;
  opt.hmc = quick_hmc();
  const auto hmc = run_sweep(opt);
  ASSERT_EQ(hmc.size(), 1u);
  EXPECT_NEAR(hmc[0].mean, quad[0].mean, 0.02);
  EXPECT_NEAR(hmc[0].sd, quad[0].sd, 0.02);
}

TEST(Fit, FlatPriorCentersAtOls) {
  FitOptions opt;
  opt.data_path = synthetic_csv("robreg_fit_flat.csv", 100);
  opt.priors = {"flat"};
  opt.hmc = quick_hmc();
  const auto report = run_fit(opt);
  const auto data = standardize(read_csv_file(opt.data_path)).data;
  const double ols = ols_fit(data)(1);
  ASSERT_EQ(report.rows.size(), 4u);  // intercept, slope, nu, sigma
  EXPECT_EQ(report.rows[1].name, "beta_x");
  EXPECT_LT(std::abs(report.rows[1].mean - ols), 4.0 * report.rows[1].mcse);
  EXPECT_EQ(report.rows[3].name, "sigma");
  EXPECT_GT(report.rows[3].mean, 0.0);
}

TEST(Fit, NormalPriorMatchesConjugate) {
  // The reduced design written as a CSV: the flat intercept leaves the slope mean unchanged.
  const auto path = std::filesystem::temp_directory_path() / "robreg_fit_normal.csv";
  {
    const auto reduced = PosteriorTarget::reduced(100, std::nullopt);
    std::ofstream out(path);
    out << "x,y\n";
    out.precision(17);
    for (Eigen::Index i = 0; i < 100; ++i) {
      out << reduced.data().X(i, 0) << ',' << reduced.data().y(i) << '\n';
    }
  }
  FitOptions opt;
  opt.data_path = path.string();
  opt.priors = {"normal,2,1"};
  opt.scale_by_sqrt_n = true;
  opt.hmc = quick_hmc();
  const auto report = run_fit(opt);
  const auto exact = conjugate_posterior(100, 2.0, 1.0);
  EXPECT_LT(std::abs(report.rows[1].mean - exact.beta_mean), 4.0 * report.rows[1].mcse);
}

TEST(Fit, ConfigAndDataErrors) {
  FitOptions opt;
  opt.data_path = synthetic_csv("robreg_fit_errors.csv", 20);
  opt.priors = {"flat", "flat"};
  EXPECT_THROW(run_fit(opt), ConfigError);
  opt.data_path = "/nonexistent/robreg.csv";
  opt.priors = {"flat"};
  EXPECT_THROW(run_fit(opt), DataError);
}

TEST(Fit, SummaryCsv) {
  FitReport report;
  report.rows.push_back({"beta_x", 0.5, 0.1, 1000.0, 0.00316});
  report.warnings.push_back("something to note");
  std::ostringstream out;
  write_fit_csv(out, report, {"robreg fit"});
  const std::string text = out.str();
  EXPECT_EQ(text.rfind("# robreg fit\n", 0), 0u);
  EXPECT_NE(text.find("# warning: something to note\n"), std::string::npos);
  EXPECT_NE(text.find("param,mean,sd,ess,mcse\nbeta_x,0.5,0.1,1000,0.00316\n"), std::string::npos);
}

TEST(Check, ReportCsv) {
  std::ostringstream out;
  write_check_csv(out, {{"a, quoted claim", 0.01, 0.05, true, ""}, {"b", 1.0, 0.5, false, "why"}},
                  {"robreg check"});
  const std::string text = out.str();
  EXPECT_NE(text.find("claim,error,threshold,verdict,detail\n"), std::string::npos);
  EXPECT_NE(text.find("\"a, quoted claim\",0.01,0.05,PASS,"), std::string::npos);
  EXPECT_NE(text.find("b,1,0.5,FAIL,why"), std::string::npos);
}

}  // namespace
