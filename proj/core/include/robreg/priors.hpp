#pragma once

#include <string>
#include <variant>

namespace robreg {

// Standardized prior densities g_j. Every family is symmetric about zero and
// is evaluated on the standardized coordinate z = (lambda / sigma)(beta - mu).

struct NormalFamily {};

struct StudentFamily {
  double dof;
};

/// Log-Pareto-tailed normal: equals phi on [-threshold, threshold] and decays
/// like (1/|z|)(1/log|z|)^tail_exponent beyond it.
struct LptnFamily {
  double mass;           // rho, central probability matched with N(0, 1)
  double threshold;      // tau
  double tail_exponent;  // theta
};

/// Constant-tailed normal: phi on [-threshold, threshold], phi(threshold)
/// beyond. Improper.
struct CtnFamily {
  double mass;       // varrho
  double threshold;  // kappa
  double log_tail;   // log phi(kappa), shared by every tail evaluation
};

class PriorFamily {
 public:
  using Variant = std::variant<NormalFamily, StudentFamily, LptnFamily, CtnFamily>;

  PriorFamily() = default;
  /// Wraps already-derived hyperparameters; prefer the named factories.
  explicit PriorFamily(Variant v) : family_(v) {}

  static PriorFamily normal();
  static PriorFamily student(double dof);
  static PriorFamily lptn(double mass);
  static PriorFamily ctn(double mass);

  const Variant& variant() const { return family_; }
  bool is_proper() const { return !std::holds_alternative<CtnFamily>(family_); }

  /// Location of the derivative discontinuity in |z|, or 0 for smooth families.
  double kink() const;

  /// Short tag: normal, student, lptn, ctn.
  std::string tag() const;
  /// Tag plus hyperparameter, e.g. "student(4)".
  std::string label() const;

 private:
  Variant family_ = NormalFamily{};
};

/// rho must lie in (2 Phi(1) - 1, 1).
PriorFamily derive_lptn(double mass);
/// varrho must lie in (0, 1).
PriorFamily derive_ctn(double mass);

double log_density(const PriorFamily& family, double z);
double density(const PriorFamily& family, double z);

/// d/dz log g(z). At the kinks |z| = tau, kappa the interior branch is used.
double grad_log_density(const PriorFamily& family, double z);

struct DensityPoint {
  double z;
  double log_density;
  double grad_log_density;
};

DensityPoint evaluate(const PriorFamily& family, double z);

/// Conditional prior of one coefficient: (lambda / sigma) g((lambda / sigma)(beta - mu)).
struct CoefficientPrior {
  double location = 0.0;  // mu
  double scale = 1.0;     // lambda, an inverse scale
  PriorFamily family;
};

void validate(const CoefficientPrior& prior);

double scaled_prior_log_density(const CoefficientPrior& prior, double beta, double sigma);

}  // namespace robreg
