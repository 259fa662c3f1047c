#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>
#include <sstream>

#include "robreg/errors.hpp"
#include "robreg/model.hpp"
#include "robreg/specfun.hpp"

namespace {

using namespace robreg;

constexpr int kN = 100;

std::vector<PriorFamily> families() {
  return {PriorFamily::normal(), PriorFamily::student(4.0), PriorFamily::lptn(0.95),
          PriorFamily::ctn(0.98)};
}

// Log posterior of the reduced problem written out by hand:
//   -(n + 1) nu - n (1 + b^2) / (2 e^{2 nu}) + log g(lambda sqrt(n) (b - mu) / e^nu).
double reduced_by_hand(const PriorFamily& g, double mu, double lambda, double b, double nu) {
  const double z = lambda * std::sqrt(double(kN)) * (b - mu) * std::exp(-nu);
  return -(kN + 1) * nu - kN * (1.0 + b * b) / (2.0 * std::exp(2.0 * nu)) + log_density(g, z);
}

double lp(const PosteriorTarget& t, double b, double nu) {
  const double beta[] = {b};
  return t.log_posterior(beta, nu);
}

Eigen::VectorXd grad(const PosteriorTarget& t, double b, double nu) {
  const double beta[] = {b};
  return t.grad_log_posterior(beta, nu);
}

// Finite-difference check of the full gradient at x; returns the worst relative error.
double worst_gradient_error(const PosteriorTarget& t, const std::vector<double>& x) {
  std::vector<double> g(x.size());
  t.log_density_gradient(x, g);
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    auto xp = x;
    auto xm = x;
    const double h = 1e-5 * std::max(1.0, std::abs(x[k]));
    xp[k] += h;
    xm[k] -= h;
    const double fd = (t.log_density(xp) - t.log_density(xm)) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - g[k]) / std::max(std::abs(g[k]), 1.0));
  }
  return worst;
}

bool near_kink(const PosteriorTarget& t, const std::vector<double>& x) {
  const double nu = x.back();
  for (Eigen::Index j = 0; j < t.num_coefficients(); ++j) {
    for (double k : t.prior_kinks(j, nu)) {
      if (std::abs(x[static_cast<std::size_t>(j)] - k) < 1e-4) return true;
    }
  }
  return false;
}

RegressionData random_data(int n, int covariates, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, covariates);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < covariates; ++j) x(i, j) = normal(rng);
  }
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = 0.5 + x.row(i).sum() * 0.3 + normal(rng);
  return make_regression_data(y, x);
}

TEST(Data, MakeRegressionDataAddsIntercept) {
  const auto d = random_data(10, 2, 1);
  EXPECT_EQ(d.p(), 3);
  EXPECT_TRUE((d.X.col(0).array() == 1.0).all());
  EXPECT_EQ(d.column_names, (std::vector<std::string>{"intercept", "x1", "x2"}));
  EXPECT_NO_THROW(validate(d));
}

TEST(Data, StandardizeColumn123) {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  Eigen::VectorXd y(3);
  y << 1, 0, 2;
  const auto s = standardize(make_regression_data(y, x));
  const double r = std::sqrt(1.5);
  EXPECT_NEAR(s.data.X(0, 1), -r, 1e-15);
  EXPECT_NEAR(s.data.X(1, 1), 0.0, 1e-15);
  EXPECT_NEAR(s.data.X(2, 1), r, 1e-15);
  EXPECT_NEAR(s.transform.column_mean(1), 2.0, 1e-15);
  EXPECT_NEAR(s.transform.column_scale(1), std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_TRUE(s.data.standardized);
}

TEST(Data, StandardizeInvariantsAndIdempotence) {
  const auto s = standardize(random_data(50, 3, 2));
  const auto& d = s.data;
  const double n = static_cast<double>(d.n());
  EXPECT_NEAR(d.y.mean(), 0.0, 1e-12);
  EXPECT_NEAR(d.y.squaredNorm() / n, 1.0, 1e-12);
  for (Eigen::Index j = 1; j < d.p(); ++j) {
    EXPECT_NEAR(d.X.col(j).mean(), 0.0, 1e-12);
    EXPECT_NEAR(d.X.col(j).squaredNorm() / n, 1.0, 1e-12);
  }
  EXPECT_TRUE((d.X.col(0).array() == 1.0).all());
  const auto again = standardize(d);
  EXPECT_LT((again.data.X - d.X).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((again.data.y - d.y).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Data, StandardizeRejectsConstantColumn) {
  Eigen::MatrixXd x(4, 2);
  x << 1, 5, 2, 5, 3, 5, 4, 5;
  Eigen::VectorXd y(4);
  y << 1, 2, 0, 3;
  EXPECT_THROW(standardize(make_regression_data(y, x)), DataError);
}

TEST(Data, OlsExactFit) {
  auto d = random_data(20, 2, 3);
  d.y = d.X.col(0);
  const auto b = ols_fit(d);
  EXPECT_NEAR(b(0), 1.0, 1e-12);
  EXPECT_NEAR(b(1), 0.0, 1e-12);
  EXPECT_NEAR(b(2), 0.0, 1e-12);
}

TEST(Data, OlsMatchesNormalEquations) {
  const auto d = random_data(20, 2, 4);
  const Eigen::VectorXd expected = (d.X.transpose() * d.X).ldlt().solve(d.X.transpose() * d.y);
  EXPECT_LT((ols_fit(d) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Data, OlsOrthogonalStandardizedIsInnerProduct) {
  const auto t = PosteriorTarget::reduced(kN, std::nullopt);
  const auto& d = t.data();
  const double expected = d.X.col(0).dot(d.y) / static_cast<double>(d.n());
  EXPECT_NEAR(ols_fit(d)(0), expected, 1e-14);
  EXPECT_NEAR(expected, 0.0, 1e-12);
}

TEST(Data, OlsRejectsRankDeficiency) {
  Eigen::MatrixXd x(5, 2);
  x << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10;
  Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(5, 0, 1);
  EXPECT_THROW(ols_fit(make_regression_data(y, x)), DataError);
}

TEST(Data, ReadCsv) {
  std::istringstream in("# comment\nx,y,w\n1,2,3\n\n4,5,6\n7,8.5,-1e-3\n");
  const auto d = read_csv(in);
  EXPECT_EQ(d.n(), 3);
  EXPECT_EQ(d.p(), 3);
  EXPECT_EQ(d.column_names, (std::vector<std::string>{"intercept", "x", "w"}));
  EXPECT_EQ(d.y(2), 8.5);
  EXPECT_EQ(d.X(2, 2), -1e-3);
}

TEST(Data, ReadCsvErrors) {
  auto fails = [](const std::string& text) {
    std::istringstream in(text);
    EXPECT_THROW(read_csv(in), DataError) << text;
  };
  fails("");
  fails("x,z\n1,2\n");
  fails("x,y\n1,2\n3\n");
  fails("x,y\n1,abc\n");
  fails("x,y\n");
  fails("x,y,y\n1,2,3\n");
  std::istringstream in("x,y\n1,2\n3,oops\n");
  try {
    read_csv(in);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(SigmaPrior, JeffreysIsFlatInNu) {
  const auto s = SigmaPrior::jeffreys();
  EXPECT_EQ(s.log_density_nu(0.3), 0.0);
  EXPECT_EQ(s.grad_log_density_nu(-2.0), 0.0);
  EXPECT_FALSE(s.sigma_power_integrable(1.0));
  EXPECT_EQ(s.label(), "jeffreys");
}

TEST(SigmaPrior, InverseGammaIsNormalizedInNu) {
  const auto s = SigmaPrior::inverse_gamma(3.0, 2.0);
  const double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double nu) { return std::exp(s.log_density_nu(nu)); }, -10.0, 10.0, 20, 1e-13);
  EXPECT_NEAR(mass, 1.0, 1e-10);
  EXPECT_TRUE(s.sigma_power_integrable(1.0));
  EXPECT_THROW(SigmaPrior::inverse_gamma(-1.0, 1.0), DomainError);
}

TEST(SigmaPrior, PowerAdjustment) {
  const auto base = SigmaPrior::inverse_gamma(2.0, 1.0);
  const auto adj = SigmaPrior::power_adjusted(base, 1.0);
  EXPECT_DOUBLE_EQ(adj.log_density_nu(0.7) - base.log_density_nu(0.7), 0.7);
  EXPECT_EQ(adj.power(), 1.0);
  EXPECT_EQ(SigmaPrior::power_adjusted(SigmaPrior::jeffreys(), -2.0).label(),
            "jeffreys*sigma^-2");
  for (double nu : {-1.0, 0.0, 0.5}) {
    const double h = 1e-6;
    const double fd = (adj.log_density_nu(nu + h) - adj.log_density_nu(nu - h)) / (2.0 * h);
    EXPECT_NEAR(fd, adj.grad_log_density_nu(nu), 1e-6);
  }
}

TEST(Reduced, LogPosteriorDifference) {
  const auto t = PosteriorTarget::reduced(kN, CoefficientPrior{0.0, 1.0, PriorFamily::normal()});
  EXPECT_NEAR(lp(t, 0.0, 0.0) - lp(t, 0.1, 0.0), 1.0, 1e-12);
}

TEST(Reduced, MatchesHandWrittenTargetUpToConstant) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ub(-3.0, 3.0);
  std::uniform_real_distribution<double> un(-1.0, 1.0);
  for (const auto& g : families()) {
    const double mu = 2.0;
    const double lambda = 0.7;
    const auto t = PosteriorTarget::reduced(kN, CoefficientPrior{mu, lambda, g});
    const double offset = lp(t, 0.0, 0.0) - reduced_by_hand(g, mu, lambda, 0.0, 0.0);
    for (int i = 0; i < 50; ++i) {
      const double b = ub(rng);
      const double nu = un(rng);
      EXPECT_NEAR(lp(t, b, nu) - reduced_by_hand(g, mu, lambda, b, nu), offset, 1e-8)
          << g.label();
    }
  }
}

TEST(Reduced, NormalPriorDependsOnLocationOnlyThroughPrior) {
  const PriorFamily g = PriorFamily::normal();
  const auto t0 = PosteriorTarget::reduced(kN, CoefficientPrior{0.0, 1.0, g});
  const auto t1 = PosteriorTarget::reduced(kN, CoefficientPrior{1.5, 1.0, g});
  const auto flat = PosteriorTarget::reduced(kN, std::nullopt);
  for (double b : {-0.5, 0.2, 1.0}) {
    const CoefficientPrior p0{0.0, 10.0, g};
    const CoefficientPrior p1{1.5, 10.0, g};
    EXPECT_NEAR(lp(t0, b, 0.1) - lp(flat, b, 0.1), scaled_prior_log_density(p0, b, std::exp(0.1)),
                1e-10);
    EXPECT_NEAR(lp(t1, b, 0.1) - lp(flat, b, 0.1), scaled_prior_log_density(p1, b, std::exp(0.1)),
                1e-10);
  }
}

TEST(Reduced, GradientSymmetryAtCenter) {
  const auto t = PosteriorTarget::reduced(kN, CoefficientPrior{0.0, 1.0, PriorFamily::normal()});
  EXPECT_NEAR(grad(t, 0.0, 0.3)(0), 0.0, 1e-12);
}

TEST(Reduced, StudentGradientClosedForm) {
  const double gamma = 4.0;
  const double mu = 2.0;
  const double lambda = 1.3;
  const auto t = PosteriorTarget::reduced(kN, CoefficientPrior{mu, lambda, PriorFamily::student(gamma)});
  for (double b : {-1.0, 0.0, 0.4, 2.5}) {
    for (double nu : {-0.5, 0.0, 0.8}) {
      const double e2 = std::exp(2.0 * nu);
      const double l2n = lambda * lambda * kN;
      const double d = b - mu;
      const double expected = -(kN / e2) * b - (gamma + 1.0) * l2n * d / (gamma * e2 + l2n * d * d);
      EXPECT_NEAR(grad(t, b, nu)(0), expected, 1e-9 * std::max(1.0, std::abs(expected)));
    }
  }
}

TEST(Reduced, NuGradientClosedForm) {
  for (const auto& g : families()) {
    const double mu = 0.8;
    const double lambda = 0.9;
    const auto t = PosteriorTarget::reduced(kN, CoefficientPrior{mu, lambda, g});
    for (double b : {-0.7, 0.1, 0.6}) {
      for (double nu : {-0.3, 0.2}) {
        const double z = lambda * std::sqrt(double(kN)) * (b - mu) * std::exp(-nu);
        const double expected = -(kN + 1.0) + (kN / std::exp(2.0 * nu)) * (1.0 + b * b) -
                                z * grad_log_density(g, z);
        EXPECT_NEAR(grad(t, b, nu)(1), expected, 1e-9 * std::abs(expected)) << g.label();
      }
    }
  }
}

TEST(Reduced, CtnTailContributesNothing) {
  const double mu = 3.0;
  const auto t = PosteriorTarget::reduced(kN, CoefficientPrior{mu, 1.0, PriorFamily::ctn(0.98)});
  for (double b : {-0.5, 0.0, 0.5}) {
    for (double nu : {-0.2, 0.1}) {
      ASSERT_GT(std::sqrt(double(kN)) * std::abs(b - mu) * std::exp(-nu), 2.33);
      const Eigen::VectorXd g = grad(t, b, nu);
      const double e2 = std::exp(2.0 * nu);
      EXPECT_NEAR(g(0), -(kN / e2) * b, 1e-10);
      EXPECT_NEAR(g(1), -(kN + 1.0) + (kN / e2) * (1.0 + b * b), 1e-9);
    }
  }
}

TEST(Reduced, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> ub(-1.0, 3.0);
  std::uniform_real_distribution<double> un(-1.0, 1.0);
  for (const auto& g : families()) {
    const auto t = PosteriorTarget::reduced(kN, CoefficientPrior{1.0, 0.5, g});
    int checked = 0;
    while (checked < 100) {
      const std::vector<double> x{ub(rng), un(rng)};
      if (near_kink(t, x)) continue;
      EXPECT_LE(worst_gradient_error(t, x), 1e-5) << g.label() << " at " << x[0] << "," << x[1];
      ++checked;
    }
  }
}

TEST(General, GradientMatchesFiniteDifferences) {
  const auto data = standardize(random_data(40, 2, 5)).data;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& error_family : {PriorFamily::normal(), PriorFamily::student(3.0)}) {
    for (const auto& g : families()) {
      const PosteriorTarget t(data,
                              {std::nullopt, CoefficientPrior{0.5, 2.0, g},
                               CoefficientPrior{-1.0, 0.5, PriorFamily::lptn(0.9)}},
                              SigmaPrior::inverse_gamma(2.0, 1.0), error_family);
      int checked = 0;
      while (checked < 50) {
        const std::vector<double> x{u(rng), u(rng) + 0.5, u(rng) - 0.5, 0.5 * u(rng)};
        if (near_kink(t, x)) continue;
        EXPECT_LE(worst_gradient_error(t, x), 1e-5) << g.label() << "/" << error_family.label();
        ++checked;
      }
    }
  }
}

TEST(General, GaussianShortcutAgreesWithResidualSum) {
  // A Student error density with a huge dof is Gaussian up to O(1/dof).
  const auto data = standardize(random_data(30, 2, 6)).data;
  const std::vector<std::optional<CoefficientPrior>> priors{
      std::nullopt, CoefficientPrior{0.0, 1.0, PriorFamily::student(4.0)}, std::nullopt};
  const PosteriorTarget fast(data, priors);
  const PosteriorTarget slow(data, priors, SigmaPrior::jeffreys(), PriorFamily::student(1e12));
  const std::vector<double> a{0.1, 0.2, -0.3, 0.05};
  const std::vector<double> b{-0.2, 0.4, 0.1, -0.1};
  EXPECT_NEAR(fast.log_density(a) - fast.log_density(b), slow.log_density(a) - slow.log_density(b),
              1e-8);
}

TEST(General, InvariantUnderRelabeling) {
  const auto data = standardize(random_data(30, 2, 7)).data;
  RegressionData swapped = data;
  swapped.X.col(1) = data.X.col(2);
  swapped.X.col(2) = data.X.col(1);
  const CoefficientPrior p1{0.3, 1.0, PriorFamily::lptn(0.95)};
  const CoefficientPrior p2{-0.4, 2.0, PriorFamily::student(4.0)};
  const PosteriorTarget t(data, {std::nullopt, p1, p2});
  const PosteriorTarget s(swapped, {std::nullopt, p2, p1});
  const std::vector<double> x{0.1, 0.5, -0.2, 0.3};
  const std::vector<double> y{0.1, -0.2, 0.5, 0.3};
  EXPECT_NEAR(t.log_density(x), s.log_density(y), 1e-10);
  std::vector<double> gx(4);
  std::vector<double> gy(4);
  t.log_density_gradient(x, gx);
  s.log_density_gradient(y, gy);
  EXPECT_NEAR(gx[1], gy[2], 1e-9);
  EXPECT_NEAR(gx[2], gy[1], 1e-9);
  EXPECT_NEAR(gx[3], gy[3], 1e-9);
}

TEST(General, Warnings) {
  const auto ctn = CoefficientPrior{0.0, 1.0, PriorFamily::ctn(0.98)};
  EXPECT_TRUE(PosteriorTarget::reduced(kN, ctn).warnings().empty());
  EXPECT_FALSE(PosteriorTarget::reduced(3, ctn).warnings().empty());
}

TEST(General, FewerObservationsThanCoefficientsIsAnError) {
  try {
    const auto data = random_data(3, 3, 8);
    const PosteriorTarget wide(data, {std::nullopt, std::nullopt, std::nullopt, std::nullopt});
    FAIL() << "expected a data error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("n = 3, p = 4"), std::string::npos);
  }
}

TEST(General, ConstructionErrors) {
  const auto data = random_data(10, 1, 9);
  EXPECT_THROW(PosteriorTarget(data, {std::nullopt}), ConfigError);
  EXPECT_THROW(PosteriorTarget(data, {std::nullopt, std::nullopt}, SigmaPrior::jeffreys(),
                               PriorFamily::ctn(0.9)),
               ConfigError);
  EXPECT_THROW(PosteriorTarget::reduced(2, std::nullopt), DomainError);
  const auto t = PosteriorTarget::reduced(kN, std::nullopt);
  const double bad[] = {std::nan("")};
  EXPECT_THROW(t.log_posterior(bad, 0.0), DomainError);
}

TEST(General, PriorKinksAndSigmaSpace) {
  const auto t = PosteriorTarget::reduced(kN, CoefficientPrior{2.0, 1.0, PriorFamily::ctn(0.98)});
  const auto kinks = t.prior_kinks(0, 0.0);
  ASSERT_EQ(kinks.size(), 2u);
  const double kappa = PriorFamily::ctn(0.98).kink();
  EXPECT_NEAR(std::min(kinks[0], kinks[1]), 2.0 - kappa / 10.0, 1e-14);
  EXPECT_NEAR(std::max(kinks[0], kinks[1]), 2.0 + kappa / 10.0, 1e-14);
  EXPECT_TRUE(PosteriorTarget::reduced(kN, std::nullopt).prior_kinks(0, 0.0).empty());
  EXPECT_EQ(PosteriorTarget::to_sigma_space(1.0, 0.25), 0.75);
}

}  // namespace
