#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "robreg/asymptotics.hpp"
#include "robreg/model.hpp"
#include "robreg/priors.hpp"
#include "robreg/sampler.hpp"

namespace robreg::cli {

enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 2,
  kDataError = 3,
  kNumericalFailure = 4,
};

/// "flat", "normal,MU,LAMBDA", "student:DOF,MU,LAMBDA", "lptn:RHO,MU,LAMBDA",
/// "ctn:VARRHO,MU,LAMBDA". Family hyperparameters default to 4, 0.95 and 0.98.
std::optional<CoefficientPrior> parse_prior(const std::string& spec);

/// "jeffreys" or "inverse-gamma:SHAPE,SCALE".
SigmaPrior parse_sigma_prior(const std::string& spec);

/// Comma-separated list of numbers.
std::vector<double> parse_list(const std::string& text);

/// "START:STOP:STEP" (inclusive, STOP appended if the step overshoots it) or a list.
std::vector<double> parse_grid(const std::string& text);

/// "pointwise=1e1:1e8,quadrature=1:1e4": decade grids for the check suite.
CheckOptions parse_check_grids(const std::string& text);

struct FitOptions {
  std::string data_path;
  std::vector<std::string> priors;  // one per covariate
  std::string intercept_prior = "flat";
  std::string sigma_prior = "jeffreys";
  double sigma_power = 0.0;
  bool scale_by_sqrt_n = false;
  HmcConfig hmc;
};

struct FitReport {
  std::vector<ParameterSummary> rows;
  std::vector<std::string> warnings;
  std::vector<Chain> chains;
  std::vector<std::string> names;  // draw columns
};

FitReport run_fit(const FitOptions& options);
void write_fit_csv(std::ostream& out, const FitReport& report,
                   const std::vector<std::string>& comments);

enum class SweepAxis { mu2, lambda2 };
enum class SweepMethod { quadrature, hmc };

/// Family entry of a sweep: tag plus one hyperparameter.
struct SweepFamily {
  std::string tag;  // jeffreys, normal, student, lptn, ctn, ctn_corrected
  double hyper = 0.0;

  std::string label() const;
};

struct SweepOptions {
  SweepAxis axis = SweepAxis::mu2;
  std::vector<double> grid;  // empty: the default grid of the axis
  std::vector<std::string> families{"jeffreys", "normal", "student", "lptn", "ctn",
                                    "ctn_corrected"};
  /// Extra hyperparameter values per family, e.g. "student=1,4,10".
  std::vector<std::string> hyper;
  int n = 100;
  double fixed_mu2 = 0.5;
  double fixed_lambda2 = 1.0;
  SweepMethod method = SweepMethod::quadrature;
  HmcConfig hmc;
  unsigned threads = 0;  // 0: hardware concurrency
};

std::vector<double> default_grid(SweepAxis axis);
std::vector<SweepFamily> resolve_families(const SweepOptions& options);

/// Reduced target of one sweep point; the sqrt(n) scaling is applied here.
PosteriorTarget sweep_target(const SweepFamily& family, int n, double mu2, double lambda2);

struct SweepRow {
  double axis_value;
  std::string family;
  double mean;
  double sd;
};

std::vector<SweepRow> run_sweep(const SweepOptions& options);
void write_sweep_csv(std::ostream& out, SweepAxis axis, const std::vector<SweepRow>& rows,
                     const std::vector<std::string>& comments);

/// Runs the check suite, turning failures of the quadrature part into FAIL rows.
std::vector<CheckResult> run_check(const CheckOptions& options, std::vector<RatioSeries>* series);
void write_check_csv(std::ostream& out, const std::vector<CheckResult>& results,
                     const std::vector<std::string>& comments);

}  // namespace robreg::cli
