#include "robreg/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "robreg/errors.hpp"

namespace robreg {

SigmaPrior SigmaPrior::jeffreys() { return SigmaPrior{}; }

SigmaPrior SigmaPrior::inverse_gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale)) {
    throw DomainError("inverse-gamma sigma prior: shape and scale must be positive and finite");
  }
  SigmaPrior prior;
  prior.base_ = InverseGamma{shape, scale};
  return prior;
}

SigmaPrior SigmaPrior::power_adjusted(const SigmaPrior& base, double power) {
  SigmaPrior prior = base;
  prior.power_ += power;
  return prior;
}

double SigmaPrior::log_density_nu(double nu) const {
  double lp = power_ * nu;
  if (const auto* ig = std::get_if<InverseGamma>(&base_)) {
    // sigma^2 ~ IG(a, b), expressed as a density of nu = log sigma.
    lp += ig->shape * std::log(ig->scale) - std::lgamma(ig->shape) + std::log(2.0) -
          2.0 * ig->shape * nu - ig->scale * std::exp(-2.0 * nu);
  }
  return lp;
}

double SigmaPrior::grad_log_density_nu(double nu) const {
  double g = power_;
  if (const auto* ig = std::get_if<InverseGamma>(&base_)) {
    g += -2.0 * ig->shape + 2.0 * ig->scale * std::exp(-2.0 * nu);
  }
  return g;
}

bool SigmaPrior::sigma_power_integrable(double k) const {
  // Jeffreys times any power of sigma diverges at one end of (0, inf).
  if (const auto* ig = std::get_if<InverseGamma>(&base_)) {
    return power_ - k < 2.0 * ig->shape;
  }
  return false;
}

std::string SigmaPrior::label() const {
  std::ostringstream out;
  if (const auto* ig = std::get_if<InverseGamma>(&base_)) {
    out << "inverse_gamma(" << ig->shape << ',' << ig->scale << ')';
  } else {
    out << "jeffreys";
  }
  if (power_ != 0.0) out << "*sigma^" << power_;
  return out.str();
}

PosteriorTarget::PosteriorTarget(RegressionData data,
                                 std::vector<std::optional<CoefficientPrior>> priors,
                                 SigmaPrior sigma_prior, PriorFamily error_family)
    : data_(std::move(data)),
      priors_(std::move(priors)),
      sigma_prior_(sigma_prior),
      error_family_(error_family) {
  if (data_.p() < 1 || data_.y.size() != data_.n()) {
    throw DataError("posterior: inconsistent data dimensions");
  }
  if (static_cast<Eigen::Index>(priors_.size()) != data_.p()) {
    std::ostringstream msg;
    msg << "posterior: " << priors_.size() << " coefficient priors for " << data_.p()
        << " coefficients";
    throw ConfigError(msg.str());
  }
  if (!error_family_.is_proper()) {
    throw ConfigError("posterior: the error density must be proper");
  }
  for (const auto& prior : priors_) {
    if (prior) validate(*prior);
  }

  const auto n = data_.n();
  const auto p = data_.p();
  if (std::holds_alternative<NormalFamily>(error_family_.variant())) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data_.X);
    if (qr.rank() == p) {
      GaussianStats g;
      g.gram = data_.X.transpose() * data_.X;
      g.ols = qr.solve(data_.y);
      g.rss_min = (data_.y - data_.X * g.ols).squaredNorm();
      gaussian_ = std::move(g);
    }
  }
  Eigen::Index n_flat = 0;
  Eigen::Index n_heavy = 0;
  bool any_ctn = false;
  for (const auto& prior : priors_) {
    if (!prior) {
      ++n_flat;
      continue;
    }
    const auto& v = prior->family.variant();
    if (std::holds_alternative<CtnFamily>(v)) any_ctn = true;
    if (!std::holds_alternative<NormalFamily>(v)) ++n_heavy;
  }
  const Eigen::Index n_informative = p - n_flat;

  if (n < p) {
    std::ostringstream msg;
    msg << "n = " << n << " < p = " << p << ": the posterior may be improper";
    warnings_.push_back(msg.str());
  }
  if (any_ctn && !sigma_prior_.sigma_power_integrable(static_cast<double>(p)) &&
      !(sigma_prior_.is_jeffreys() && sigma_prior_.power() == 0.0 && n > p + 2)) {
    warnings_.push_back(
        "constant-tailed prior: neither sigma^-p pi(sigma) integrable nor (Jeffreys and n > p + 2)");
  }
  // Conservative bound: every heavy-tailed coefficient may sit in conflict.
  if (n_heavy > 0 && n + n_informative < 2 * p + 1 + n_heavy) {
    std::ostringstream msg;
    msg << "heavy-tailed priors: n + " << n_informative << " < 2p + 1 + " << n_heavy
        << "; robustness guarantees may not hold";
    warnings_.push_back(msg.str());
  }
}

PosteriorTarget PosteriorTarget::reduced(int n, std::optional<CoefficientPrior> prior,
                                         SigmaPrior sigma_prior) {
  if (n < 3) throw DomainError("reduced target: need n >= 3");
  const Eigen::Index rows = n;
  Eigen::VectorXd a(rows);
  for (Eigen::Index i = 0; i < rows; ++i) a(i) = static_cast<double>(i) - 0.5 * (n - 1);
  // x is odd and y even about the center, so x'y = 0; both have mean square 1.
  Eigen::VectorXd x = a / std::sqrt(a.squaredNorm() / n);
  Eigen::VectorXd sq = a.array().square();
  Eigen::VectorXd y = sq.array() - sq.mean();
  y /= std::sqrt(y.squaredNorm() / n);

  RegressionData data;
  data.X = x;
  data.y = y;
  data.has_intercept = false;
  data.standardized = true;
  data.column_names = {"x"};

  if (prior) {
    validate(*prior);
    prior->scale *= std::sqrt(static_cast<double>(n));
  }
  return PosteriorTarget(std::move(data), {prior}, sigma_prior);
}

double PosteriorTarget::evaluate(std::span<const double> beta, double nu, double* grad) const {
  const auto p = data_.p();
  if (static_cast<Eigen::Index>(beta.size()) != p) {
    throw DomainError("posterior: beta has the wrong dimension");
  }
  if (!std::isfinite(nu)) throw DomainError("posterior: nu must be finite");
  for (double b : beta) {
    if (!std::isfinite(b)) throw DomainError("posterior: beta must be finite");
  }

  const Eigen::Map<const Eigen::VectorXd> b(beta.data(), p);
  const double inv_sigma = std::exp(-nu);
  const auto n = data_.n();

  double lp = -static_cast<double>(n) * nu;
  double d_nu = -static_cast<double>(n);
  Eigen::VectorXd d_beta;
  if (gaussian_) {
    const Eigen::VectorXd d = b - gaussian_->ols;
    const Eigen::VectorXd gd = gaussian_->gram * d;
    const double scaled_rss = (gaussian_->rss_min + d.dot(gd)) * inv_sigma * inv_sigma;
    lp += -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) - 0.5 * scaled_rss;
    if (grad) {
      d_beta = -inv_sigma * inv_sigma * gd;
      d_nu += scaled_rss;
    }
  } else {
    const Eigen::VectorXd u = (data_.y - data_.X * b) * inv_sigma;
    Eigen::VectorXd score;
    if (grad) score.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      lp += robreg::log_density(error_family_, u(i));
      if (grad) {
        const double s = grad_log_density(error_family_, u(i));
        score(i) = s;
        d_nu -= s * u(i);
      }
    }
    if (grad) d_beta = -inv_sigma * (data_.X.transpose() * score);
  }

  for (Eigen::Index j = 0; j < p; ++j) {
    const auto& prior = priors_[static_cast<std::size_t>(j)];
    if (!prior) continue;
    const double lam = prior->scale;
    const double z = lam * inv_sigma * (beta[static_cast<std::size_t>(j)] - prior->location);
    lp += std::log(lam) - nu + robreg::log_density(prior->family, z);
    if (grad) {
      const double d = grad_log_density(prior->family, z);
      d_beta(j) += d * lam * inv_sigma;
      d_nu += -1.0 - d * z;
    }
  }

  lp += sigma_prior_.log_density_nu(nu);
  if (grad) {
    d_nu += sigma_prior_.grad_log_density_nu(nu);
    for (Eigen::Index j = 0; j < p; ++j) grad[j] = d_beta(j);
    grad[p] = d_nu;
  }
  return lp;
}

double PosteriorTarget::log_posterior(std::span<const double> beta, double nu) const {
  return evaluate(beta, nu, nullptr);
}

Eigen::VectorXd PosteriorTarget::grad_log_posterior(std::span<const double> beta, double nu) const {
  Eigen::VectorXd g(data_.p() + 1);
  evaluate(beta, nu, g.data());
  return g;
}

std::vector<double> PosteriorTarget::prior_kinks(Eigen::Index j, double nu) const {
  if (j < 0 || j >= data_.p()) throw DomainError("prior_kinks: coefficient index out of range");
  const auto& prior = priors_[static_cast<std::size_t>(j)];
  if (!prior) return {};
  const double k = prior->family.kink();
  if (k <= 0.0) return {};
  const double half = k * std::exp(nu) / prior->scale;
  return {prior->location - half, prior->location + half};
}

double PosteriorTarget::log_density(std::span<const double> x) const {
  if (x.size() != dimension()) throw DomainError("posterior: state has the wrong dimension");
  return evaluate(x.first(x.size() - 1), x.back(), nullptr);
}

double PosteriorTarget::log_density_gradient(std::span<const double> x,
                                             std::span<double> grad) const {
  if (x.size() != dimension() || grad.size() != dimension()) {
    throw DomainError("posterior: state or gradient has the wrong dimension");
  }
  return evaluate(x.first(x.size() - 1), x.back(), grad.data());
}

}  // namespace robreg
