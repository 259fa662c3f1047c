#include "robreg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "gauss_kronrod.hpp"
#include "robreg/errors.hpp"

namespace robreg {

ConjugateResult conjugate_posterior(int n, double mu, double lambda) {
  if (n <= 2) throw DomainError("conjugate posterior: variance undefined for n <= 2");
  if (!(lambda > 0.0) || !std::isfinite(lambda) || !std::isfinite(mu)) {
    throw DomainError("conjugate posterior: need finite mu and lambda > 0");
  }
  const double l2 = lambda * lambda;
  const double shrink = 1.0 / (1.0 + l2);
  const double excess = 1.0 + mu * mu * l2 * shrink;
  const double nd = n;
  return {mu * l2 * shrink, shrink * excess / (nd - 2.0), 0.5 * nd, 0.5 * nd * excess};
}

Moments jeffreys_benchmark(int n) {
  if (n <= 3) throw DomainError("jeffreys benchmark: the posterior is improper for n <= 3");
  return {0.0, 1.0 / (n - 3.0)};
}

double InverseGammaLaw::mean() const {
  if (!(shape > 1.0)) throw DomainError("inverse-gamma mean needs shape > 1");
  return scale / (shape - 1.0);
}

double InverseGammaLaw::variance() const {
  if (!(shape > 2.0)) throw DomainError("inverse-gamma variance needs shape > 2");
  const double m = scale / (shape - 1.0);
  return m * m / (shape - 2.0);
}

PosteriorTarget LimitingTarget::build(int n) const {
  return PosteriorTarget::reduced(n, std::nullopt,
                                  SigmaPrior::power_adjusted(sigma_prior, sigma_power));
}

LimitingTarget limiting_target(const PriorFamily& family, SigmaPrior sigma_prior) {
  const auto& v = family.variant();
  double power = 0.0;
  if (std::holds_alternative<NormalFamily>(v)) {
    throw DomainError("limiting target: the normal prior has no conflict limit");
  } else if (const auto* s = std::get_if<StudentFamily>(&v)) {
    power = s->dof;
  } else if (std::holds_alternative<CtnFamily>(v)) {
    power = -1.0;
  }
  return {family, power, sigma_prior};
}

InverseGammaLaw limiting_sigma_posterior(int n, const LimitingTarget& limit) {
  // Integrating the slope out of the reduced likelihood leaves
  // sigma^-(n-1) exp(-n / (2 sigma^2)); the prior adds sigma^k and, in nu,
  // either a constant (Jeffreys) or -2a nu - b e^{-2 nu}.
  const double k = limit.sigma_power + limit.sigma_prior.power();
  const double nd = n;
  double shape = 0.5 * (nd - 1.0 - k);
  double scale = 0.5 * nd;
  if (const auto ig = limit.sigma_prior.inverse_gamma_base()) {
    shape += ig->shape;
    scale += ig->scale;
  }
  if (!(shape > 0.0)) {
    std::ostringstream msg;
    msg << "limiting sigma posterior: shape " << shape << " is not positive for n = " << n;
    throw DomainError(msg.str());
  }
  return {shape, scale};
}

InverseGammaLaw limiting_sigma_posterior(int n, const PriorFamily& family) {
  return limiting_sigma_posterior(n, limiting_target(family));
}

QuadratureSpec QuadratureSpec::refined() const {
  QuadratureSpec s = *this;
  s.inner_tol *= 1e-3;
  s.outer_tol *= 1e-3;
  return s;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Everything the nested integration needs about a one-coefficient target.
class ReducedIntegrand {
 public:
  ReducedIntegrand(const PosteriorTarget& target, const QuadratureSpec& spec)
      : target_(target), spec_(spec) {
    const auto& data = target.data();
    gram_ = data.X.col(0).squaredNorm();
    if (!(gram_ > 0.0)) throw DataError("quadrature: design column is zero");
    ols_ = data.X.col(0).dot(data.y) / gram_;
    rss_ = (data.y - data.X.col(0) * ols_).squaredNorm();
    if (const auto& prior = target.priors().front()) {
      has_prior_ = true;
      mu_ = prior->location;
      lambda_ = prior->scale;
    }
  }

  double log_density(double beta, double nu) const {
    const double b[1] = {beta};
    const double lp = target_.log_posterior(b, nu);
    return std::isnan(lp) ? kNegInf : lp;
  }

  double ols() const { return ols_; }
  double rss() const { return rss_; }
  double gram() const { return gram_; }

  std::vector<double> key_points() const {
    std::vector<double> keys{ols_};
    if (has_prior_) {
      keys.push_back(mu_);
      const double l2 = lambda_ * lambda_;
      keys.push_back((gram_ * ols_ + l2 * mu_) / (gram_ + l2));
    }
    return keys;
  }

  struct Inner {
    double shift = kNegInf;  // log scale factor of the values
    detail::Vec<3> value{};  // integrals of 1, beta - c, (beta - c)^2
    bool converged = true;
  };

  // Conditional integral over beta at fixed nu.
  Inner inner(double nu, double center) const {
    const double sigma = std::exp(nu);
    const double s_lik = sigma / std::sqrt(gram_);
    const double s_min = has_prior_ ? std::min(s_lik, sigma / lambda_) : s_lik;
    const auto keys = key_points();
    const double lo_key = *std::min_element(keys.begin(), keys.end());
    const double hi_key = *std::max_element(keys.begin(), keys.end());

    Inner out;
    for (double k : keys) out.shift = std::max(out.shift, log_density(k, nu));
    if (!std::isfinite(out.shift)) {
      out.shift = kNegInf;
      return out;
    }

    // Grow the interval until both edges are negligible against the peak.
    const double cut = std::log(spec_.edge_ratio);
    const double start = 8.0 * s_lik;
    double lo = lo_key - start;
    double hi = hi_key + start;
    double reach_lo = start;
    double reach_hi = start;
    while (log_density(lo, nu) - out.shift > cut) {
      reach_lo *= 2.0;
      if (reach_lo > spec_.max_growth * start) {
        throw NumericalError("quadrature: slope interval does not close; target not integrable");
      }
      lo = lo_key - reach_lo;
    }
    while (log_density(hi, nu) - out.shift > cut) {
      reach_hi *= 2.0;
      if (reach_hi > spec_.max_growth * start) {
        throw NumericalError("quadrature: slope interval does not close; target not integrable");
      }
      hi = hi_key + reach_hi;
    }

    // Geometric ladders around every key point resolve peaks that sit at or
    // near them, however wide the interval; kinks become panel edges.
    std::vector<double> breaks{lo, hi};
    for (double k : keys) {
      breaks.push_back(k);
      for (double step = 0.5 * s_min; k + step < hi || k - step > lo; step *= 2.0) {
        breaks.push_back(k + step);
        breaks.push_back(k - step);
      }
    }
    for (double kink : target_.prior_kinks(0, nu)) breaks.push_back(kink);
    std::erase_if(breaks, [&](double x) { return !(x >= lo && x <= hi); });
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    double spread = s_lik;
    for (double k : keys) spread = std::max(spread, std::abs(k - center));
    const detail::Vec<3> weight{1.0, spread, spread * spread};

    const double shift = out.shift;
    auto f = [&](double beta) {
      const double w = std::exp(log_density(beta, nu) - shift);
      const double d = beta - center;
      return detail::Vec<3>{w, w * d, w * d * d};
    };
    const auto r = detail::integrate<3>(f, breaks, weight, spec_.inner_tol, spec_.max_panels);
    out.value = r.value;
    out.converged = r.converged;
    return out;
  }

  // log of the conditional integral, for locating the nu range.
  double log_mass(double nu, double center) const {
    const Inner r = inner(nu, center);
    if (!(r.value[0] > 0.0) || !std::isfinite(r.shift)) return kNegInf;
    return r.shift + std::log(r.value[0]);
  }

 private:
  const PosteriorTarget& target_;
  const QuadratureSpec& spec_;
  double gram_ = 0.0;
  double ols_ = 0.0;
  double rss_ = 0.0;
  bool has_prior_ = false;
  double mu_ = 0.0;
  double lambda_ = 1.0;
};

}  // namespace

QuadratureResult quadrature_moments(const PosteriorTarget& target, const QuadratureSpec& spec) {
  if (target.num_coefficients() != 1) {
    throw ConfigError("quadrature: only one-coefficient (reduced) targets are supported");
  }
  const ReducedIntegrand integrand(target, spec);

  // Center the slope moments on the best key point of the scale mode.
  const double n = static_cast<double>(target.data().n());
  const double nu_guess = 0.5 * std::log(std::max(integrand.rss(), 1e-300) / n);
  double center = integrand.ols();
  {
    double best = kNegInf;
    for (double k : integrand.key_points()) {
      const double lp = integrand.log_density(k, nu_guess);
      if (lp > best) {
        best = lp;
        center = k;
      }
    }
  }

  // Scan nu on a grid, then push both ends out until they are negligible.
  double lo = nu_guess - 1.0;
  double hi = nu_guess + 1.0;
  double peak = kNegInf;
  double nu_peak = nu_guess;
  for (int i = 0; i <= 40; ++i) {
    const double nu = lo + 0.05 * i;
    const double lm = integrand.log_mass(nu, center);
    if (lm > peak) {
      peak = lm;
      nu_peak = nu;
    }
  }
  if (!std::isfinite(peak)) throw NumericalError("quadrature: density vanishes on the starting box");

  const double cut = std::log(spec.edge_ratio);
  const double start_width = hi - lo;
  auto grow = [&](double& edge, double direction) {
    for (double lm = integrand.log_mass(edge, center); lm - peak > cut || std::isnan(lm);
         lm = integrand.log_mass(edge, center)) {
      if (!std::isfinite(lm)) {
        throw NumericalError("quadrature: non-finite density while growing the box");
      }
      if (lm > peak) {
        peak = lm;
        nu_peak = edge;
      }
      edge += direction * 0.5 * (hi - lo);
      // Past this reach e^{-2 nu} leaves double range and the target has not closed.
      if (hi - lo > spec.max_growth * start_width || std::abs(edge - nu_guess) > 200.0) {
        throw NumericalError("quadrature: box does not close; target not integrable");
      }
    }
  };
  grow(lo, -1.0);
  grow(hi, 1.0);

  bool inner_ok = true;
  auto outer = [&](double nu) {
    const auto r = integrand.inner(nu, center);
    inner_ok = inner_ok && r.converged;
    if (!std::isfinite(r.shift)) return detail::Vec<5>{};
    const double w = std::exp(r.shift - peak);
    const double s = std::exp(2.0 * (nu - nu_peak));
    return detail::Vec<5>{w * r.value[0], w * r.value[1], w * r.value[2], w * s * r.value[0],
                          w * s * s * r.value[0]};
  };

  double spread = 0.0;
  for (double k : integrand.key_points()) spread = std::max(spread, std::abs(k - center));
  spread = std::max(spread, std::exp(nu_peak) / std::sqrt(integrand.gram()));
  const detail::Vec<5> weight{1.0, spread, spread * spread, 1.0, 1.0};

  std::vector<double> breaks;
  const int pieces = 16;
  for (int i = 0; i <= pieces; ++i) breaks.push_back(lo + (hi - lo) * i / pieces);
  breaks.push_back(nu_peak);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const auto r = detail::integrate<5>(outer, breaks, weight, spec.outer_tol, spec.max_panels);
  if (!r.converged || !inner_ok) {
    throw NumericalError("quadrature: adaptive integration did not reach the requested tolerance");
  }
  const double i0 = r.value[0];
  if (!(i0 > 0.0) || !std::isfinite(i0)) throw NumericalError("quadrature: zero or non-finite mass");

  QuadratureResult out;
  const double m1 = r.value[1] / i0;
  const double m2 = r.value[2] / i0;
  out.mean = center + m1;
  out.sd = std::sqrt(std::max(m2 - m1 * m1, 0.0));
  out.log_normalizer = peak + std::log(i0);
  const double scale = std::exp(2.0 * nu_peak);
  const double s1 = r.value[3] / i0;
  const double s2 = r.value[4] / i0;
  out.sigma_sq_mean = scale * s1;
  out.sigma_sq_variance = scale * scale * std::max(s2 - s1 * s1, 0.0);
  out.nu_lo = lo;
  out.nu_hi = hi;
  out.outer_panels = r.panels;
  return out;
}

}  // namespace robreg
