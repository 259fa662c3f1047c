#pragma once

#include <optional>

#include "robreg/model.hpp"
#include "robreg/priors.hpp"

namespace robreg {

/// Closed-form posterior of the reduced problem under a normal prior
/// N(mu, sigma^2 / (n lambda^2)) on the slope and the Jeffreys prior on sigma.
struct ConjugateResult {
  double beta_mean;
  double beta_variance;
  double sigma_sq_shape;  // sigma^2 ~ inverse-gamma(shape, scale)
  double sigma_sq_scale;
};

ConjugateResult conjugate_posterior(int n, double mu, double lambda);

struct Moments {
  double mean;
  double variance;
};

/// Slope posterior of the reduced problem with flat slope prior and Jeffreys sigma prior.
Moments jeffreys_benchmark(int n);

struct InverseGammaLaw {
  double shape;
  double scale;

  double mean() const;      // requires shape > 1
  double variance() const;  // requires shape > 2
};

/// Limit of the reduced target as the slope prior moves into conflict:
/// the prior is dropped and its tail leaves a factor sigma^sigma_power.
struct LimitingTarget {
  PriorFamily family;
  double sigma_power = 0.0;  // student: +dof, lptn: 0, ctn: -1
  SigmaPrior sigma_prior;

  PosteriorTarget build(int n) const;
};

/// Throws DomainError for the normal family, which has no robust limit.
LimitingTarget limiting_target(const PriorFamily& family,
                               SigmaPrior sigma_prior = SigmaPrior::jeffreys());

/// Exact inverse-gamma law of sigma^2 under the limiting reduced target.
InverseGammaLaw limiting_sigma_posterior(int n, const LimitingTarget& limit);
InverseGammaLaw limiting_sigma_posterior(int n, const PriorFamily& family);

struct QuadratureSpec {
  double inner_tol = 1e-10;  // relative to the scale of the inner integral
  double outer_tol = 1e-9;
  /// Drop-off below the peak density at which the box stops growing.
  double edge_ratio = 1e-12;
  /// Box growth beyond this multiple of the starting width means non-integrable.
  double max_growth = 1e6;
  int max_panels = 4000;

  /// Same box rule with tolerances tightened by a factor 1000.
  QuadratureSpec refined() const;
};

struct QuadratureResult {
  double mean = 0.0;
  double sd = 0.0;
  /// log of the integral of exp(log_density) over (beta, nu).
  double log_normalizer = 0.0;
  double sigma_sq_mean = 0.0;
  double sigma_sq_variance = 0.0;
  double nu_lo = 0.0;
  double nu_hi = 0.0;
  int outer_panels = 0;
};

/// Posterior moments of a one-coefficient target by nested adaptive
/// Gauss-Kronrod quadrature over (beta, nu). Throws ConfigError unless the
/// target has a single coefficient, and NumericalError when the box cannot
/// be closed or the integrals do not converge.
QuadratureResult quadrature_moments(const PosteriorTarget& target,
                                    const QuadratureSpec& spec = {});

}  // namespace robreg
