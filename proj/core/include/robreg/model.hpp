#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "robreg/log_density.hpp"
#include "robreg/priors.hpp"

namespace robreg {

struct RegressionData {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;  // n x p; column 0 is the intercept when has_intercept
  bool has_intercept = true;
  bool standardized = false;
  std::vector<std::string> column_names;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
};

/// Builds a data set with an intercept column prepended to `covariates`.
RegressionData make_regression_data(Eigen::VectorXd y, const Eigen::MatrixXd& covariates,
                                    std::vector<std::string> covariate_names = {});

/// Checks shape invariants (n >= p >= 1, intercept column of ones); throws DataError.
void validate(const RegressionData& data);

/// Reads a CSV with a header row. The column named `y` is the response and
/// every other column is a numeric covariate; the intercept is added.
RegressionData read_csv(std::istream& in);
RegressionData read_csv_file(const std::string& path);

struct Standardization {
  Eigen::VectorXd column_mean;   // per column of X (intercept: 0)
  Eigen::VectorXd column_scale;  // root mean square after centering (intercept: 1)
  double response_mean = 0.0;
  double response_scale = 1.0;
};

struct StandardizedData {
  RegressionData data;
  Standardization transform;
};

/// Centers and scales y and every non-intercept column to mean 0 and mean
/// square 1. Throws DataError for constant columns.
StandardizedData standardize(const RegressionData& data);

/// Least-squares coefficients; throws DataError when X is rank deficient.
Eigen::VectorXd ols_fit(const RegressionData& data);

/// Prior on the error scale sigma, optionally multiplied by sigma^power.
class SigmaPrior {
 public:
  struct Jeffreys {};
  /// Inverse-gamma(shape, scale) on sigma^2.
  struct InverseGamma {
    double shape;
    double scale;
  };

  static SigmaPrior jeffreys();
  static SigmaPrior inverse_gamma(double shape, double scale);
  /// base density times sigma^power.
  static SigmaPrior power_adjusted(const SigmaPrior& base, double power);

  bool is_jeffreys() const { return std::holds_alternative<Jeffreys>(base_); }
  double power() const { return power_; }
  /// Parameters of the inverse-gamma base, if that is the base.
  std::optional<InverseGamma> inverse_gamma_base() const {
    if (const auto* ig = std::get_if<InverseGamma>(&base_)) return *ig;
    return std::nullopt;
  }

  /// log density of nu = log sigma, i.e. log pi(e^nu) + nu.
  double log_density_nu(double nu) const;
  double grad_log_density_nu(double nu) const;

  /// Whether the integral of sigma^-k pi(sigma) over (0, inf) is finite.
  bool sigma_power_integrable(double k) const;

  std::string label() const;

 private:
  std::variant<Jeffreys, InverseGamma> base_ = Jeffreys{};
  double power_ = 0.0;
};

/// Joint posterior of (beta, nu = log sigma) for the linear model
///   y_i = x_i' beta + sigma eps_i,  eps_i ~ f,
/// with independent conditional priors (lambda_j / sigma) g_j((lambda_j / sigma)(beta_j - mu_j)).
/// A missing coefficient prior means the flat prior pi_j(beta_j | sigma) = 1.
class PosteriorTarget final : public LogDensityModel {
 public:
  PosteriorTarget(RegressionData data, std::vector<std::optional<CoefficientPrior>> priors,
                  SigmaPrior sigma_prior = SigmaPrior::jeffreys(),
                  PriorFamily error_family = PriorFamily::normal());

  /// Two-parameter target (beta_2, nu) of an orthogonal, standardized design
  /// with n observations and zero least-squares estimate. The prior scale is
  /// taken on the unit axis and multiplied by sqrt(n); pass nullopt for the flat prior.
  static PosteriorTarget reduced(int n, std::optional<CoefficientPrior> prior,
                                 SigmaPrior sigma_prior = SigmaPrior::jeffreys());

  const RegressionData& data() const { return data_; }
  const std::vector<std::optional<CoefficientPrior>>& priors() const { return priors_; }
  const SigmaPrior& sigma_prior() const { return sigma_prior_; }
  const PriorFamily& error_family() const { return error_family_; }
  /// Properness conditions that could not be verified at construction.
  const std::vector<std::string>& warnings() const { return warnings_; }

  Eigen::Index num_coefficients() const { return data_.p(); }

  /// Unnormalized log density of (beta, nu), including the e^nu Jacobian.
  double log_posterior(std::span<const double> beta, double nu) const;
  /// Gradient with respect to (beta_1, ..., beta_p, nu).
  Eigen::VectorXd grad_log_posterior(std::span<const double> beta, double nu) const;

  /// Converts a log density in (beta, nu) into one in (beta, sigma).
  static double to_sigma_space(double log_density_nu, double nu) { return log_density_nu - nu; }

  /// Values of beta_j at which the prior of coefficient j has a derivative
  /// discontinuity for the given nu.
  std::vector<double> prior_kinks(Eigen::Index j, double nu) const;

  std::size_t dimension() const override { return static_cast<std::size_t>(data_.p()) + 1; }
  double log_density(std::span<const double> x) const override;
  double log_density_gradient(std::span<const double> x, std::span<double> grad) const override;

 private:
  double evaluate(std::span<const double> beta, double nu, double* grad) const;

  // Gaussian errors: RSS(beta) = rss_min + d' gram d with d = beta - ols.
  struct GaussianStats {
    Eigen::MatrixXd gram;
    Eigen::VectorXd ols;
    double rss_min = 0.0;
  };

  RegressionData data_;
  std::optional<GaussianStats> gaussian_;
  std::vector<std::optional<CoefficientPrior>> priors_;
  SigmaPrior sigma_prior_;
  PriorFamily error_family_;
  std::vector<std::string> warnings_;
};

}  // namespace robreg
