#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "robreg/model.hpp"
#include "robreg/oracle.hpp"
#include "robreg/priors.hpp"

namespace robreg {

/// Linear conflict path of one coefficient: mu = a + b w, lambda = c + d w.
/// A coefficient moves either its location (b != 0) or its scale (d > 0), not both.
struct CoefficientPath {
  double a = 0.0;
  double b = 0.0;
  double c = 1.0;
  double d = 0.0;

  double location(double omega) const { return a + b * omega; }
  double scale(double omega) const { return c + d * omega; }
};

class ConflictPath {
 public:
  explicit ConflictPath(std::vector<CoefficientPath> coefficients);

  const std::vector<CoefficientPath>& coefficients() const { return coefficients_; }
  std::vector<std::size_t> location_conflicts() const;  // b != 0
  std::vector<std::size_t> scale_conflicts() const;     // d > 0
  std::vector<std::size_t> conflicts() const;           // union, ascending

 private:
  std::vector<CoefficientPath> coefficients_;
};

/// A sequence of ratios indexed by an increasing conflict parameter.
struct RatioSeries {
  std::string name;
  std::string family;
  std::vector<double> omega;
  std::vector<double> ratio;
  double target = 1.0;

  double abs_err(std::size_t i) const;
  double terminal_abs_err() const;
  /// |ratio - target| does not increase over the last `count` points.
  bool tail_nonincreasing(std::size_t count = 3) const;
};

/// `omega,ratio,target,abs_err`, preceded by `# key=value` comment lines.
void write_csv(std::ostream& out, const RatioSeries& series,
               const std::vector<std::string>& comments = {});

/// Powers of ten from lo to hi inclusive (both must be powers of ten).
std::vector<double> decade_grid(double lo, double hi);

/// [(lambda/sigma) g((lambda/sigma)(beta - mu))] / g(mu) over mu; limit (sigma/lambda)^dof.
RatioSeries prior_ratio_student(double lambda, double sigma, double beta, double dof,
                                const std::vector<double>& mu_grid);

/// The same ratio for the LPTN family; limit 1.
RatioSeries prior_ratio_lptn(double lambda, double sigma, double beta, double mass,
                             const std::vector<double>& mu_grid);

struct ScalingTrace {
  RatioSeries density;    // (lambda/sigma) g((lambda/sigma)(beta - mu)), target 0
  RatioSeries companion;  // density over phi(tau) (tau/|beta - mu|) (log tau / log lambda)^theta
};

/// LPTN prior density as its scale lambda grows. Throws DomainError if beta == mu.
ScalingTrace lptn_scaling_trace(double beta, double mu, double sigma, double mass,
                                const std::vector<double>& lambda_grid);

enum class CtnRegime {
  location,  // mu runs over the grid with lambda fixed
  scale,     // lambda runs over the grid with mu fixed
};

/// (lambda/sigma) g((lambda/sigma)(beta - mu)) over (lambda/sigma) phi(kappa); limit 1,
/// attained exactly once |z| > kappa. `fixed` is lambda (location) or mu (scale).
RatioSeries prior_limit_ctn(double beta, double fixed, double sigma, double mass,
                            CtnRegime regime, const std::vector<double>& grid);

/// Reduced problem whose single slope prior follows a conflict path.
struct ReducedProblem {
  int n = 100;
  PriorFamily family;
  SigmaPrior sigma_prior = SigmaPrior::jeffreys();
  QuadratureSpec quadrature;

  /// Target at conflict level omega; the path scale is on the unit axis.
  PosteriorTarget at(const CoefficientPath& path, double omega) const;
};

/// m_w divided by its predicted tail behaviour times the limiting marginal
/// m-bar, along a one-coefficient path. Target 1.
RatioSeries marginal_ratio_convergence(const ConflictPath& path, const ReducedProblem& problem,
                                       const std::vector<double>& omega_grid);

struct SummaryRow {
  double omega;
  double mean;
  double sd;
};

struct SummaryComparison {
  std::vector<SummaryRow> rows;
  double limit_mean;  // NaN when the family has no conflict limit
  double limit_sd;
};

SummaryComparison limiting_summary_comparison(const ConflictPath& path,
                                              const ReducedProblem& problem,
                                              const std::vector<double>& omega_grid);

struct CheckResult {
  std::string claim;
  double error = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string detail;
};

struct CheckOptions {
  std::vector<double> pointwise_grid = decade_grid(1e1, 1e8);
  std::vector<double> quadrature_grid = decade_grid(1e0, 1e4);
  bool pointwise = true;
  bool quadrature = true;
};

/// Runs every limit check; collected series are appended to `series` when given.
std::vector<CheckResult> run_asymptotic_checks(const CheckOptions& options,
                                               std::vector<RatioSeries>* series = nullptr);

}  // namespace robreg
