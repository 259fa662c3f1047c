#include "robreg/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "robreg/errors.hpp"
#include "robreg/specfun.hpp"

namespace robreg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_increasing(const std::vector<double>& grid, const char* what) {
  if (grid.empty()) throw ConfigError(std::string(what) + ": grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw ConfigError(std::string(what) + ": grid must be strictly increasing");
    }
  }
}

// log of (lambda/sigma) g((lambda/sigma)(beta - mu)).
double log_scaled_prior(const PriorFamily& family, double lambda, double sigma, double beta,
                        double mu) {
  const double r = lambda / sigma;
  return std::log(r) + log_density(family, r * (beta - mu));
}

void require_positive(double lambda, double sigma) {
  if (!(lambda > 0.0) || !(sigma > 0.0)) {
    throw DomainError("prior ratio: lambda and sigma must be positive");
  }
}

RatioSeries location_ratio(const PriorFamily& family, double lambda, double sigma, double beta,
                           const std::vector<double>& mu_grid, std::string name, double target) {
  require_positive(lambda, sigma);
  require_increasing(mu_grid, "prior ratio");
  RatioSeries s{std::move(name), family.label(), mu_grid, {}, target};
  for (double mu : mu_grid) {
    s.ratio.push_back(
        std::exp(log_scaled_prior(family, lambda, sigma, beta, mu) - log_density(family, mu)));
  }
  return s;
}

}  // namespace

ConflictPath::ConflictPath(std::vector<CoefficientPath> coefficients)
    : coefficients_(std::move(coefficients)) {
  for (const auto& c : coefficients_) {
    if (!(c.c > 0.0) || !(c.d >= 0.0) || !std::isfinite(c.a) || !std::isfinite(c.b)) {
      throw ConfigError("conflict path: need finite a, b, c > 0 and d >= 0");
    }
    if (c.b != 0.0 && c.d != 0.0) {
      throw ConfigError("conflict path: a coefficient cannot move both location and scale");
    }
  }
}

std::vector<std::size_t> ConflictPath::location_conflicts() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < coefficients_.size(); ++j) {
    if (coefficients_[j].b != 0.0) out.push_back(j);
  }
  return out;
}

std::vector<std::size_t> ConflictPath::scale_conflicts() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < coefficients_.size(); ++j) {
    if (coefficients_[j].d > 0.0) out.push_back(j);
  }
  return out;
}

std::vector<std::size_t> ConflictPath::conflicts() const {
  auto out = location_conflicts();
  const auto s = scale_conflicts();
  out.insert(out.end(), s.begin(), s.end());
  std::sort(out.begin(), out.end());
  return out;
}

double RatioSeries::abs_err(std::size_t i) const { return std::abs(ratio.at(i) - target); }

double RatioSeries::terminal_abs_err() const {
  if (ratio.empty()) return kNaN;
  return abs_err(ratio.size() - 1);
}

bool RatioSeries::tail_nonincreasing(std::size_t count) const {
  if (ratio.size() < 2) return true;
  const std::size_t first = ratio.size() > count ? ratio.size() - count : 0;
  for (std::size_t i = first + 1; i < ratio.size(); ++i) {
    if (abs_err(i) > abs_err(i - 1)) return false;
  }
  return true;
}

void write_csv(std::ostream& out, const RatioSeries& series,
               const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "# series=" << series.name << '\n' << "# family=" << series.family << '\n';
  out << "omega,ratio,target,abs_err\n";
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < series.omega.size(); ++i) {
    out << series.omega[i] << ',' << series.ratio[i] << ',' << series.target << ','
        << series.abs_err(i) << '\n';
  }
  out.precision(old);
}

std::vector<double> decade_grid(double lo, double hi) {
  if (!(lo > 0.0) || !(hi >= lo)) throw ConfigError("decade grid: need 0 < lo <= hi");
  const double first = std::log10(lo);
  const double last = std::log10(hi);
  if (std::abs(first - std::round(first)) > 1e-9 || std::abs(last - std::round(last)) > 1e-9) {
    throw ConfigError("decade grid: bounds must be powers of ten");
  }
  std::vector<double> grid;
  for (long e = std::lround(first); e <= std::lround(last); ++e) {
    grid.push_back(std::pow(10.0, static_cast<double>(e)));
  }
  return grid;
}

RatioSeries prior_ratio_student(double lambda, double sigma, double beta, double dof,
                                const std::vector<double>& mu_grid) {
  require_positive(lambda, sigma);
  return location_ratio(PriorFamily::student(dof), lambda, sigma, beta, mu_grid, "student_ratio",
                        std::exp(dof * std::log(sigma / lambda)));
}

RatioSeries prior_ratio_lptn(double lambda, double sigma, double beta, double mass,
                             const std::vector<double>& mu_grid) {
  return location_ratio(PriorFamily::lptn(mass), lambda, sigma, beta, mu_grid, "lptn_ratio", 1.0);
}

ScalingTrace lptn_scaling_trace(double beta, double mu, double sigma, double mass,
                                const std::vector<double>& lambda_grid) {
  if (beta == mu) throw DomainError("lptn scaling trace: beta == mu makes the density unbounded");
  if (!(sigma > 0.0)) throw DomainError("lptn scaling trace: sigma must be positive");
  require_increasing(lambda_grid, "lptn scaling trace");
  if (!(lambda_grid.front() > 1.0)) {
    throw DomainError("lptn scaling trace: lambda must exceed 1 so that log lambda > 0");
  }
  const PriorFamily family = PriorFamily::lptn(mass);
  const auto& f = std::get<LptnFamily>(family.variant());
  const double dist = std::abs(beta - mu);

  ScalingTrace t;
  t.density = {"lptn_scaling_density", family.label(), lambda_grid, {}, 0.0};
  t.companion = {"lptn_scaling_companion", family.label(), lambda_grid, {}, 1.0};
  for (double lambda : lambda_grid) {
    const double log_dens = log_scaled_prior(family, lambda, sigma, beta, mu);
    const double log_asym = specfun::normal_log_pdf(f.threshold) + std::log(f.threshold) -
                            std::log(dist) +
                            f.tail_exponent * (std::log(std::log(f.threshold)) -
                                               std::log(std::log(lambda)));
    t.density.ratio.push_back(std::exp(log_dens));
    t.companion.ratio.push_back(std::exp(log_dens - log_asym));
  }
  return t;
}

RatioSeries prior_limit_ctn(double beta, double fixed, double sigma, double mass,
                            CtnRegime regime, const std::vector<double>& grid) {
  if (!(sigma > 0.0)) throw DomainError("ctn limit: sigma must be positive");
  require_increasing(grid, "ctn limit");
  if (regime == CtnRegime::location && !(fixed > 0.0)) {
    throw DomainError("ctn limit: lambda must be positive");
  }
  if (regime == CtnRegime::scale && beta == fixed) {
    throw DomainError("ctn limit: beta == mu never leaves the interior as lambda grows");
  }
  const PriorFamily family = PriorFamily::ctn(mass);
  const double log_tail = std::get<CtnFamily>(family.variant()).log_tail;
  RatioSeries s{regime == CtnRegime::location ? "ctn_location_limit" : "ctn_scale_limit",
                family.label(), grid, {}, 1.0};
  for (double w : grid) {
    const double lambda = regime == CtnRegime::location ? fixed : w;
    const double mu = regime == CtnRegime::location ? w : fixed;
    if (!(lambda > 0.0)) throw DomainError("ctn limit: lambda must be positive");
    // The (lambda / sigma) factors cancel; in the tail both sides are the
    // same stored constant, so the ratio is exactly one.
    const double z = lambda / sigma * (beta - mu);
    s.ratio.push_back(std::exp(log_density(family, z) - log_tail));
  }
  return s;
}

PosteriorTarget ReducedProblem::at(const CoefficientPath& path, double omega) const {
  return PosteriorTarget::reduced(
      n, CoefficientPrior{path.location(omega), path.scale(omega), family}, sigma_prior);
}

namespace {

enum class Conflict { none, location, scale };

const CoefficientPath& single(const ConflictPath& path, Conflict& kind) {
  if (path.coefficients().size() != 1) {
    throw ConfigError("reduced conflict path: exactly one coefficient is required");
  }
  const auto& c = path.coefficients().front();
  kind = c.b != 0.0 ? Conflict::location : (c.d > 0.0 ? Conflict::scale : Conflict::none);
  return c;
}

// log of the factor the prior tends to, excluding the sigma power kept in
// the limiting target.
double log_tail_factor(const PriorFamily& family, Conflict kind, double mu, double lambda_eff) {
  const auto& v = family.variant();
  if (kind == Conflict::none) return 0.0;
  if (const auto* c = std::get_if<CtnFamily>(&v)) return std::log(lambda_eff) + c->log_tail;
  if (kind == Conflict::scale) {
    throw ConfigError("marginal ratio: only the constant-tailed family has a scale-conflict limit");
  }
  if (const auto* s = std::get_if<StudentFamily>(&v)) {
    return log_density(family, mu) - s->dof * std::log(lambda_eff);
  }
  if (std::holds_alternative<LptnFamily>(v)) return log_density(family, mu);
  throw ConfigError("marginal ratio: the normal family has no conflict limit");
}

}  // namespace

RatioSeries marginal_ratio_convergence(const ConflictPath& path, const ReducedProblem& problem,
                                       const std::vector<double>& omega_grid) {
  require_increasing(omega_grid, "marginal ratio");
  Conflict kind{};
  const auto& coef = single(path, kind);
  // Check the family before spending time on quadrature.
  (void)log_tail_factor(problem.family, kind, coef.location(omega_grid.front()), 1.0);

  double log_limit = 0.0;
  if (kind == Conflict::none) {
    log_limit = quadrature_moments(problem.at(coef, 0.0), problem.quadrature).log_normalizer;
  } else {
    const auto limit = limiting_target(problem.family, problem.sigma_prior).build(problem.n);
    log_limit = quadrature_moments(limit, problem.quadrature).log_normalizer;
  }

  const double root_n = std::sqrt(static_cast<double>(problem.n));
  RatioSeries s{"marginal_ratio", problem.family.label(), omega_grid, {}, 1.0};
  for (double w : omega_grid) {
    const double log_m = quadrature_moments(problem.at(coef, w), problem.quadrature).log_normalizer;
    const double log_tail =
        log_tail_factor(problem.family, kind, coef.location(w), coef.scale(w) * root_n);
    s.ratio.push_back(std::exp(log_m - log_tail - log_limit));
  }
  return s;
}

SummaryComparison limiting_summary_comparison(const ConflictPath& path,
                                              const ReducedProblem& problem,
                                              const std::vector<double>& omega_grid) {
  require_increasing(omega_grid, "summary comparison");
  Conflict kind{};
  const auto& coef = single(path, kind);
  SummaryComparison out{{}, kNaN, kNaN};
  for (double w : omega_grid) {
    const auto q = quadrature_moments(problem.at(coef, w), problem.quadrature);
    out.rows.push_back({w, q.mean, q.sd});
  }
  if (kind == Conflict::none) {
    const auto q = quadrature_moments(problem.at(coef, 0.0), problem.quadrature);
    out.limit_mean = q.mean;
    out.limit_sd = q.sd;
  } else if (!std::holds_alternative<NormalFamily>(problem.family.variant())) {
    const auto limit = limiting_target(problem.family, problem.sigma_prior).build(problem.n);
    const auto q = quadrature_moments(limit, problem.quadrature);
    out.limit_mean = q.mean;
    out.limit_sd = q.sd;
  }
  return out;
}

namespace {

CheckResult check(std::string claim, double error, double threshold, bool pass,
                  std::string detail = {}) {
  return {std::move(claim), error, threshold, pass, std::move(detail)};
}

double max_abs_err(const RatioSeries& s) {
  double e = 0.0;
  for (std::size_t i = 0; i < s.ratio.size(); ++i) e = std::max(e, s.abs_err(i));
  return e;
}

bool nonincreasing_everywhere(const RatioSeries& s) { return s.tail_nonincreasing(s.ratio.size()); }

void pointwise_checks(const CheckOptions& opt, std::vector<CheckResult>& out,
                      std::vector<RatioSeries>* keep) {
  const auto& grid = opt.pointwise_grid;

  // Student: (sigma / lambda)^dof over the 27-point design.
  double worst = 0.0;
  std::string worst_at;
  for (double lambda : {0.5, 1.0, 2.0}) {
    for (double sigma : {0.5, 1.0, 2.0}) {
      for (double dof : {1.0, 4.0, 10.0}) {
        const auto s = prior_ratio_student(lambda, sigma, 1.0, dof, grid);
        const double rel = s.terminal_abs_err() / s.target;
        if (rel > worst) {
          worst = rel;
          std::ostringstream at;
          at << "lambda=" << lambda << " sigma=" << sigma << " dof=" << dof;
          worst_at = at.str();
        }
        if (keep && lambda == 2.0 && sigma == 1.0 && dof == 4.0) keep->push_back(s);
      }
    }
  }
  out.push_back(check("student ratio reaches (sigma/lambda)^dof at the largest mu (27 cases)",
                      worst, 0.01, worst < 0.01, "worst case " + worst_at));

  // LPTN location-scale invariance.
  const auto lptn = prior_ratio_lptn(1.0, 1.0, 1.0, 0.95, grid);
  if (keep) keep->push_back(lptn);
  out.push_back(check("lptn ratio within 0.05 of 1 at the largest mu", lptn.terminal_abs_err(),
                      0.05, lptn.terminal_abs_err() < 0.05));
  out.push_back(check("lptn ratio error nonincreasing over the last three mu",
                      lptn.terminal_abs_err(), 0.0, lptn.tail_nonincreasing(3)));

  // Constant tails: exact attainment.
  const auto ctn_loc = prior_limit_ctn(0.0, 1.0, 1.0, 0.98, CtnRegime::location, grid);
  const auto ctn_scale = prior_limit_ctn(0.5, 0.0, 1.0, 0.98, CtnRegime::scale, grid);
  if (keep) {
    keep->push_back(ctn_loc);
    keep->push_back(ctn_scale);
  }
  out.push_back(check("ctn location limit is exactly 1 beyond kappa", max_abs_err(ctn_loc), 0.0,
                      max_abs_err(ctn_loc) == 0.0));
  out.push_back(check("ctn scale limit is exactly 1 beyond kappa", max_abs_err(ctn_scale), 0.0,
                      max_abs_err(ctn_scale) == 0.0));

  // LPTN scale trace: slow, monotone approach of the companion ratio.
  const auto trace = lptn_scaling_trace(0.5, 0.0, 1.0, 0.95, decade_grid(1e1, 1e12));
  if (keep) {
    keep->push_back(trace.density);
    keep->push_back(trace.companion);
  }
  const auto& comp = trace.companion.ratio;
  const double err6 = std::abs(comp[5] - 1.0);
  const double err12 = std::abs(comp.back() - 1.0);
  out.push_back(check("lptn scale-trace companion error nonincreasing in lambda",
                      trace.companion.terminal_abs_err(), 0.0,
                      nonincreasing_everywhere(trace.companion)));
  out.push_back(check("lptn scale-trace companion error at lambda=1e6", err6, 0.24, err6 < 0.24,
                      "log-rate convergence; bound pinned from the computed trace"));
  out.push_back(check("lptn scale-trace companion error at lambda=1e12", err12, 0.115,
                      err12 < 0.115, "log-rate convergence; bound pinned from the computed trace"));
  const double big = 1e50;
  const auto near = lptn_scaling_trace(0.5, 0.0, 1.0, 0.95, {big});
  const auto far = lptn_scaling_trace(1.0, 0.0, 1.0, 0.95, {big});
  const double shape = std::abs(near.density.ratio[0] / far.density.ratio[0] / 2.0 - 1.0);
  out.push_back(check("lptn density proportional to 1/|beta-mu| at lambda=1e50", shape, 0.05,
                      shape < 0.05));
}

void quadrature_checks(const CheckOptions& opt, std::vector<CheckResult>& out,
                       std::vector<RatioSeries>* keep) {
  const auto& grid = opt.quadrature_grid;

  ReducedProblem ctn{100, PriorFamily::ctn(0.98), SigmaPrior::jeffreys(), {}};
  const ConflictPath scale_path({{0.5, 0.0, 1.0, 1.0}});
  const auto ctn_ratio = marginal_ratio_convergence(scale_path, ctn, grid);
  if (keep) keep->push_back(ctn_ratio);
  out.push_back(check("ctn marginal ratio within 2% of 1 at the largest omega",
                      ctn_ratio.terminal_abs_err(), 0.02, ctn_ratio.terminal_abs_err() < 0.02));
  out.push_back(check("ctn marginal ratio error nonincreasing over the last three omega",
                      ctn_ratio.terminal_abs_err(), 0.0, ctn_ratio.tail_nonincreasing(3)));

  ReducedProblem ctn_fine = ctn;
  ctn_fine.quadrature = ctn.quadrature.refined();
  const auto fine = marginal_ratio_convergence(scale_path, ctn_fine, grid);
  double drift = 0.0;
  for (std::size_t i = 0; i < fine.ratio.size(); ++i) {
    drift = std::max(drift, std::abs(fine.ratio[i] - ctn_ratio.ratio[i]));
  }
  out.push_back(check("ctn marginal ratio stable under 1000x tighter quadrature", drift, 1e-4,
                      drift < 1e-4));

  ReducedProblem lptn{100, PriorFamily::lptn(0.95), SigmaPrior::jeffreys(), {}};
  const ConflictPath location_path({{0.0, 1.0, 1.0, 0.0}});
  const auto lptn_ratio = marginal_ratio_convergence(location_path, lptn, grid);
  if (keep) keep->push_back(lptn_ratio);
  out.push_back(check("lptn marginal ratio error nonincreasing over the last three omega",
                      lptn_ratio.terminal_abs_err(), 0.0, lptn_ratio.tail_nonincreasing(3),
                      "slow log-rate approach"));

  ReducedProblem student{100, PriorFamily::student(4.0), SigmaPrior::jeffreys(), {}};
  const auto l10 = limiting_summary_comparison(location_path, lptn, {10.0});
  const auto s10 = limiting_summary_comparison(location_path, student, {10.0});
  const double lptn_gap = std::abs(l10.rows[0].mean - l10.limit_mean);
  const double student_gap = std::abs(s10.rows[0].mean - s10.limit_mean);
  out.push_back(check("lptn resolves a location conflict faster than student at omega=10",
                      lptn_gap, student_gap, lptn_gap < student_gap));

  const auto c10 = limiting_summary_comparison(scale_path, ctn, {10.0});
  const double ctn_gap = std::abs(c10.rows[0].mean - c10.limit_mean);
  out.push_back(check("ctn mean within 0.05 of its limit at omega=10 on the scale path", ctn_gap,
                      0.05, ctn_gap < 0.05));
}

}  // namespace

std::vector<CheckResult> run_asymptotic_checks(const CheckOptions& options,
                                               std::vector<RatioSeries>* series) {
  std::vector<CheckResult> out;
  if (options.pointwise) {
    require_increasing(options.pointwise_grid, "pointwise checks");
    pointwise_checks(options, out, series);
  }
  if (options.quadrature) {
    require_increasing(options.quadrature_grid, "quadrature checks");
    quadrature_checks(options, out, series);
  }
  return out;
}

}  // namespace robreg
