#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "robreg/errors.hpp"
#include "robreg/oracle.hpp"

namespace robreg::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& text, const std::string& context) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ConfigError(context + ": '" + text + "' is not a number");
  }
  return value;
}

PriorFamily family_from(const std::string& tag, std::optional<double> hyper) {
  if (tag == "normal") {
    if (hyper) throw ConfigError("prior: the normal family takes no hyperparameter");
    return PriorFamily::normal();
  }
  if (tag == "student") return PriorFamily::student(hyper.value_or(4.0));
  if (tag == "lptn") return PriorFamily::lptn(hyper.value_or(0.95));
  if (tag == "ctn") return PriorFamily::ctn(hyper.value_or(0.98));
  throw ConfigError("prior: unknown family '" + tag + "'");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

void write_comments(std::ostream& out, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
}

double default_hyper(const std::string& tag) {
  if (tag == "student") return 4.0;
  if (tag == "lptn") return 0.95;
  if (tag == "ctn" || tag == "ctn_corrected") return 0.98;
  return 0.0;
}

bool has_hyper(const std::string& tag) {
  return tag == "student" || tag == "lptn" || tag == "ctn" || tag == "ctn_corrected";
}

}  // namespace

std::optional<CoefficientPrior> parse_prior(const std::string& spec) {
  const auto parts = split(spec, ',');
  if (parts.empty() || parts[0].empty()) throw ConfigError("prior: empty specification");
  if (parts[0] == "flat") {
    if (parts.size() != 1) throw ConfigError("prior: 'flat' takes no parameters");
    return std::nullopt;
  }
  if (parts.size() != 3) {
    throw ConfigError("prior '" + spec + "': expected FAMILY[:HYPER],MU,LAMBDA");
  }
  std::string tag = parts[0];
  std::optional<double> hyper;
  if (const auto colon = tag.find(':'); colon != std::string::npos) {
    hyper = parse_number(tag.substr(colon + 1), "prior hyperparameter");
    tag = tag.substr(0, colon);
  }
  CoefficientPrior prior;
  prior.family = family_from(tag, hyper);
  prior.location = parse_number(parts[1], "prior location");
  prior.scale = parse_number(parts[2], "prior scale");
  validate(prior);
  return prior;
}

SigmaPrior parse_sigma_prior(const std::string& spec) {
  const auto s = trim(spec);
  if (s == "jeffreys") return SigmaPrior::jeffreys();
  const std::string ig = "inverse-gamma:";
  if (s.rfind(ig, 0) == 0) {
    const auto params = split(s.substr(ig.size()), ',');
    if (params.size() != 2) throw ConfigError("sigma prior: expected inverse-gamma:SHAPE,SCALE");
    return SigmaPrior::inverse_gamma(parse_number(params[0], "sigma prior shape"),
                                     parse_number(params[1], "sigma prior scale"));
  }
  throw ConfigError("sigma prior: unknown specification '" + spec + "'");
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_number(item, "list"));
  if (out.empty()) throw ConfigError("list: no values");
  return out;
}

std::vector<double> parse_grid(const std::string& text) {
  if (text.find(':') == std::string::npos) return parse_list(text);
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw ConfigError("grid: expected START:STOP:STEP");
  const double start = parse_number(parts[0], "grid start");
  const double stop = parse_number(parts[1], "grid stop");
  const double step = parse_number(parts[2], "grid step");
  if (!(step > 0.0) || stop < start) throw ConfigError("grid: need STEP > 0 and STOP >= START");
  std::vector<double> out;
  const double slack = 1e-9 * step;
  for (long i = 0;; ++i) {
    const double v = start + static_cast<double>(i) * step;
    if (v > stop + slack) break;
    out.push_back(v);
  }
  if (std::abs(out.back() - stop) > slack) out.push_back(stop);
  return out;
}

CheckOptions parse_check_grids(const std::string& text) {
  CheckOptions opt;
  for (const auto& item : split(text, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("grids: expected NAME=LO:HI, got '" + item + "'");
    const auto name = trim(item.substr(0, eq));
    const auto range = split(item.substr(eq + 1), ':');
    if (range.size() != 2) throw ConfigError("grids: expected NAME=LO:HI, got '" + item + "'");
    auto grid = decade_grid(parse_number(range[0], "grid bound"), parse_number(range[1], "grid bound"));
    if (name == "pointwise") {
      opt.pointwise_grid = std::move(grid);
    } else if (name == "quadrature") {
      opt.quadrature_grid = std::move(grid);
    } else {
      throw ConfigError("grids: unknown grid '" + name + "'");
    }
  }
  return opt;
}

FitReport run_fit(const FitOptions& options) {
  const RegressionData raw = read_csv_file(options.data_path);
  const StandardizedData std_data = standardize(raw);
  const auto& data = std_data.data;
  const auto covariates = static_cast<std::size_t>(data.p() - 1);
  if (options.priors.size() != covariates) {
    std::ostringstream msg;
    msg << "fit: " << options.priors.size() << " --prior values for " << covariates << " covariates";
    throw ConfigError(msg.str());
  }

  std::vector<std::optional<CoefficientPrior>> priors;
  priors.push_back(parse_prior(options.intercept_prior));
  for (const auto& spec : options.priors) priors.push_back(parse_prior(spec));
  if (options.scale_by_sqrt_n) {
    const double root_n = std::sqrt(static_cast<double>(data.n()));
    for (auto& p : priors) {
      if (p) p->scale *= root_n;
    }
  }
  const SigmaPrior sigma =
      SigmaPrior::power_adjusted(parse_sigma_prior(options.sigma_prior), options.sigma_power);

  const PosteriorTarget target(data, priors, sigma);
  FitReport report;
  report.warnings = target.warnings();

  const Eigen::VectorXd ols = ols_fit(data);
  const double rss = (data.y - data.X * ols).squaredNorm();
  std::vector<double> init(ols.data(), ols.data() + ols.size());
  init.push_back(std::log(std::max(std::sqrt(rss / static_cast<double>(data.n())), 1e-3)));

  report.chains = sample(target, init, options.hmc);
  for (const auto& name : data.column_names) report.names.push_back("beta_" + name);
  report.names.push_back("nu");
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(report.names.size()); ++k) {
    report.rows.push_back(summarize(report.chains, k, report.names[static_cast<std::size_t>(k)]));
  }
  std::vector<Chain> sigma_chains = report.chains;
  for (auto& c : sigma_chains) {
    c.draws = c.draws.col(c.draws.cols() - 1).array().exp().matrix().eval();
  }
  report.rows.push_back(summarize(sigma_chains, 0, "sigma"));

  const auto tuning = tuning_warnings(report.chains);
  report.warnings.insert(report.warnings.end(), tuning.begin(), tuning.end());
  return report;
}

void write_fit_csv(std::ostream& out, const FitReport& report,
                   const std::vector<std::string>& comments) {
  write_comments(out, comments);
  out << "# scale=standardized\n";
  for (const auto& w : report.warnings) out << "# warning: " << w << '\n';
  out << "param,mean,sd,ess,mcse\n";
  const auto old = out.precision(10);
  for (const auto& r : report.rows) {
    out << r.name << ',' << r.mean << ',' << r.sd << ',' << r.ess << ',' << r.mcse << '\n';
  }
  out.precision(old);
}

std::string SweepFamily::label() const {
  if (!has_hyper(tag)) return tag;
  std::ostringstream out;
  out << tag << '(' << hyper << ')';
  return out.str();
}

std::vector<double> default_grid(SweepAxis axis) {
  return axis == SweepAxis::mu2 ? parse_grid("0:2:0.05") : parse_grid("0.02:2:0.04");
}

std::vector<SweepFamily> resolve_families(const SweepOptions& options) {
  std::vector<std::pair<std::string, std::vector<double>>> extra;
  for (const auto& h : options.hyper) {
    const auto eq = h.find('=');
    if (eq == std::string::npos) throw ConfigError("hyper: expected FAMILY=v1,v2,...");
    const auto tag = trim(h.substr(0, eq));
    if (!has_hyper(tag)) throw ConfigError("hyper: family '" + tag + "' has no hyperparameter");
    if (std::find(options.families.begin(), options.families.end(), tag) ==
        options.families.end()) {
      throw ConfigError("hyper: family '" + tag + "' is not in --families");
    }
    extra.emplace_back(tag, parse_list(h.substr(eq + 1)));
  }
  if (options.families.empty()) throw ConfigError("sweep: no families");
  std::vector<SweepFamily> out;
  for (const auto& tag : options.families) {
    if (tag != "jeffreys" && tag != "normal" && !has_hyper(tag)) {
      throw ConfigError("sweep: unknown family '" + tag + "'");
    }
    std::vector<double> values{default_hyper(tag)};
    for (const auto& [t, v] : extra) {
      if (t == tag) values = v;
    }
    for (double v : values) out.push_back({tag, v});
  }
  // Validate every hyperparameter before any work starts.
  for (const auto& f : out) (void)sweep_target(f, std::max(options.n, 4), 0.0, 1.0);
  return out;
}

PosteriorTarget sweep_target(const SweepFamily& family, int n, double mu2, double lambda2) {
  if (family.tag == "jeffreys") return PosteriorTarget::reduced(n, std::nullopt);
  SigmaPrior sigma = SigmaPrior::jeffreys();
  PriorFamily prior_family;
  if (family.tag == "normal") {
    prior_family = PriorFamily::normal();
  } else if (family.tag == "student") {
    prior_family = PriorFamily::student(family.hyper);
  } else if (family.tag == "lptn") {
    prior_family = PriorFamily::lptn(family.hyper);
  } else if (family.tag == "ctn" || family.tag == "ctn_corrected") {
    prior_family = PriorFamily::ctn(family.hyper);
    // sigma times the Jeffreys prior offsets the 1/sigma left by the constant tail.
    if (family.tag == "ctn_corrected") sigma = SigmaPrior::power_adjusted(sigma, 1.0);
  } else {
    throw ConfigError("sweep: unknown family '" + family.tag + "'");
  }
  return PosteriorTarget::reduced(n, CoefficientPrior{mu2, lambda2, prior_family}, sigma);
}

std::vector<SweepRow> run_sweep(const SweepOptions& options) {
  if (options.n < 4) throw ConfigError("sweep: n must be at least 4");
  const auto grid = options.grid.empty() ? default_grid(options.axis) : options.grid;
  if (grid.empty()) throw ConfigError("sweep: empty grid");
  if (options.method == SweepMethod::hmc) validate(options.hmc);
  const auto families = resolve_families(options);

  const std::size_t tasks = grid.size() * families.size();
  std::vector<SweepRow> rows(tasks);
  std::vector<std::exception_ptr> errors(tasks);
  auto work = [&](std::size_t t) {
    const double v = grid[t / families.size()];
    const auto& fam = families[t % families.size()];
    const double mu2 = options.axis == SweepAxis::mu2 ? v : options.fixed_mu2;
    const double lambda2 = options.axis == SweepAxis::lambda2 ? v : options.fixed_lambda2;
    const PosteriorTarget target = sweep_target(fam, options.n, mu2, lambda2);
    double mean = 0.0;
    double sd = 0.0;
    if (options.method == SweepMethod::quadrature) {
      const auto q = quadrature_moments(target);
      mean = q.mean;
      sd = q.sd;
    } else {
      HmcConfig hmc = options.hmc;
      hmc.chains = std::max(1, hmc.chains);
      const auto chains = sample(target, std::vector<double>{0.0, 0.0}, hmc);
      const auto s = summarize(chains, 0, "beta");
      mean = s.mean;
      sd = s.sd;
    }
    rows[t] = {v, fam.label(), mean, sd};
  };

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  // HMC already runs one thread per chain.
  if (options.method == SweepMethod::hmc) threads = 1;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(tasks)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      try {
        work(t);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, SweepAxis axis, const std::vector<SweepRow>& rows,
                     const std::vector<std::string>& comments) {
  write_comments(out, comments);
  out << (axis == SweepAxis::mu2 ? "mu2" : "lambda2") << ",family,mean,sd\n";
  const auto old = out.precision(12);
  for (const auto& r : rows) {
    out << r.axis_value << ',' << r.family << ',' << r.mean << ',' << r.sd << '\n';
  }
  out.precision(old);
}

std::vector<CheckResult> run_check(const CheckOptions& options, std::vector<RatioSeries>* series) {
  CheckOptions pointwise = options;
  pointwise.quadrature = false;
  auto results = run_asymptotic_checks(pointwise, series);
  if (options.quadrature) {
    CheckOptions quad = options;
    quad.pointwise = false;
    try {
      const auto q = run_asymptotic_checks(quad, series);
      results.insert(results.end(), q.begin(), q.end());
    } catch (const std::exception& e) {
      results.push_back({"quadrature-based checks", std::nan(""), 0.0, false, e.what()});
    }
  }
  return results;
}

void write_check_csv(std::ostream& out, const std::vector<CheckResult>& results,
                     const std::vector<std::string>& comments) {
  write_comments(out, comments);
  out << "claim,error,threshold,verdict,detail\n";
  const auto old = out.precision(10);
  for (const auto& r : results) {
    out << csv_field(r.claim) << ',' << r.error << ',' << r.threshold << ','
        << (r.pass ? "PASS" : "FAIL") << ',' << csv_field(r.detail) << '\n';
  }
  out.precision(old);
}

}  // namespace robreg::cli
