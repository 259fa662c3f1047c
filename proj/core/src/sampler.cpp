#include "robreg/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "robreg/errors.hpp"

namespace robreg {

void validate(const HmcConfig& c) {
  if (!(c.step_size > 0.0) || !std::isfinite(c.step_size)) {
    throw ConfigError("hmc: step size must be positive");
  }
  if (c.leapfrog_steps < 1) throw ConfigError("hmc: leapfrog steps must be >= 1");
  if (c.warmup < 0) throw ConfigError("hmc: warmup must be >= 0");
  if (c.samples < 1) throw ConfigError("hmc: samples must be >= 1");
  if (c.chains < 1) throw ConfigError("hmc: chains must be >= 1");
  if (!(c.max_divergent_fraction >= 0.0 && c.max_divergent_fraction <= 1.0)) {
    throw ConfigError("hmc: max divergent fraction must lie in [0, 1]");
  }
}

double leapfrog(const LogDensityModel& model, std::span<double> q, std::span<double> p,
                std::span<double> g, double eps, int steps) {
  const std::size_t d = q.size();
  double lp = 0.0;
  for (int s = 0; s < steps; ++s) {
    for (std::size_t k = 0; k < d; ++k) p[k] += 0.5 * eps * g[k];
    for (std::size_t k = 0; k < d; ++k) q[k] += eps * p[k];
    for (std::size_t k = 0; k < d; ++k) {
      if (!std::isfinite(q[k])) return -std::numeric_limits<double>::infinity();
    }
    lp = model.log_density_gradient(q, g);
    for (std::size_t k = 0; k < d; ++k) p[k] += 0.5 * eps * g[k];
  }
  return lp;
}

namespace {

Chain run_chain(const LogDensityModel& model, std::span<const double> init,
                const HmcConfig& c, int index) {
  const std::size_t d = model.dimension();
  Chain chain;
  chain.index = index;
  chain.seed = c.seed;
  std::seed_seq seq{static_cast<std::uint32_t>(c.seed), static_cast<std::uint32_t>(c.seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  const int l_lo = c.jitter ? static_cast<int>(std::ceil(0.8 * c.leapfrog_steps)) : c.leapfrog_steps;
  const int l_hi = c.jitter ? static_cast<int>(std::ceil(1.2 * c.leapfrog_steps)) : c.leapfrog_steps;
  std::uniform_int_distribution<int> steps_dist(l_lo, l_hi);

  std::vector<double> q(init.begin(), init.end());
  std::vector<double> g(d);
  double lp = model.log_density_gradient(q, g);
  if (!std::isfinite(lp)) throw NumericalError("hmc: initial point has non-finite log density");

  std::vector<double> q_new(d), g_new(d), p(d);
  std::vector<double> last_divergent;
  chain.draws.resize(c.samples, static_cast<Eigen::Index>(d));
  long accepted = 0;
  const int total = c.warmup + c.samples;
  for (int it = 0; it < total; ++it) {
    for (auto& pk : p) pk = normal(rng);
    const double h0 = -lp + 0.5 * std::inner_product(p.begin(), p.end(), p.begin(), 0.0);
    q_new = q;
    g_new = g;
    double lp_new = -std::numeric_limits<double>::infinity();
    try {
      lp_new = leapfrog(model, q_new, p, g_new, c.step_size, steps_dist(rng));
    } catch (const DomainError&) {
      // Left the region where the density is defined; treat as divergent.
    }
    const double h1 = -lp_new + 0.5 * std::inner_product(p.begin(), p.end(), p.begin(), 0.0);
    const double dh = h1 - h0;
    if (!std::isfinite(dh) || dh > c.divergence_threshold) {
      ++chain.divergences;
      last_divergent = q_new;
    } else if (dh <= 0.0 || unif(rng) < std::exp(-dh)) {
      q.swap(q_new);
      g.swap(g_new);
      lp = lp_new;
      if (it >= c.warmup) ++accepted;
    }
    if (it >= c.warmup) {
      for (std::size_t k = 0; k < d; ++k) {
        chain.draws(it - c.warmup, static_cast<Eigen::Index>(k)) = q[k];
      }
    }
  }
  chain.accept_rate = static_cast<double>(accepted) / c.samples;
  if (chain.divergences > c.max_divergent_fraction * total) {
    std::ostringstream msg;
    msg << "hmc: chain " << index << " had " << chain.divergences << " divergent trajectories out of "
        << total << "; reduce the step size. Last divergent state: (";
    for (std::size_t k = 0; k < d; ++k) msg << (k ? ", " : "") << last_divergent[k];
    msg << ')';
    throw NumericalError(msg.str());
  }
  return chain;
}

double variance_of(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
}

// Biased autocovariance at one lag of an already centered series.
double autocovariance(const Eigen::VectorXd& centered, Eigen::Index lag) {
  const Eigen::Index n = centered.size();
  return centered.head(n - lag).dot(centered.tail(n - lag)) / static_cast<double>(n);
}

}  // namespace

std::vector<Chain> sample(const LogDensityModel& model, std::span<const double> init,
                          const HmcConfig& config) {
  validate(config);
  if (init.size() != model.dimension()) throw ConfigError("hmc: initial point has wrong dimension");
  std::vector<Chain> chains(static_cast<std::size_t>(config.chains));
  std::vector<std::exception_ptr> errors(chains.size());
  {
    std::vector<std::jthread> workers;
    for (int k = 0; k < config.chains; ++k) {
      workers.emplace_back([&, k] {
        try {
          chains[static_cast<std::size_t>(k)] = run_chain(model, init, config, k);
        } catch (...) {
          errors[static_cast<std::size_t>(k)] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return chains;
}

double effective_sample_size(const std::vector<Eigen::VectorXd>& chains) {
  const std::size_t m = chains.size();
  if (m == 0) return 0.0;
  const Eigen::Index n = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != n) throw DomainError("ess: chains must have equal length");
  }
  const double total = static_cast<double>(m) * static_cast<double>(n);
  if (n < 4) return total;

  std::vector<Eigen::VectorXd> centered;
  double mean_var = 0.0;
  Eigen::VectorXd means(static_cast<Eigen::Index>(m));
  const double nd = static_cast<double>(n);
  for (std::size_t k = 0; k < m; ++k) {
    means(static_cast<Eigen::Index>(k)) = chains[k].mean();
    centered.emplace_back(chains[k].array() - chains[k].mean());
    mean_var += autocovariance(centered.back(), 0) * nd / (nd - 1.0);
  }
  mean_var /= static_cast<double>(m);
  double var_plus = mean_var * (nd - 1.0) / nd;
  if (m > 1) var_plus += variance_of(means);
  if (!(var_plus > 0.0)) return total;

  auto rho = [&](std::size_t lag) {
    double s = 0.0;
    for (const auto& c : centered) s += autocovariance(c, static_cast<Eigen::Index>(lag));
    return 1.0 - (mean_var - s / static_cast<double>(m)) / var_plus;
  };

  // Geyer: sum consecutive pairs while positive, enforcing monotonicity.
  std::vector<double> pairs;
  const auto max_lag = static_cast<std::size_t>(n - 1);
  for (std::size_t t = 0; t + 1 <= max_lag; t += 2) {
    const double pair = rho(t) + rho(t + 1);
    if (!(pair > 0.0)) break;
    if (!pairs.empty()) pairs.push_back(std::min(pair, pairs.back()));
    else pairs.push_back(pair);
  }
  double tau = -1.0;
  for (double pr : pairs) tau += 2.0 * pr;
  if (!(tau > 0.0)) return total;
  return std::min(total / tau, total);
}

ParameterSummary summarize(const std::vector<Chain>& chains, Eigen::Index column,
                           std::string name) {
  if (chains.empty()) throw DomainError("summarize: no chains");
  std::vector<Eigen::VectorXd> cols;
  Eigen::Index total = 0;
  for (const auto& c : chains) {
    if (column < 0 || column >= c.draws.cols()) throw DomainError("summarize: column out of range");
    cols.emplace_back(c.draws.col(column));
    total += c.draws.rows();
  }
  Eigen::VectorXd all(total);
  Eigen::Index at = 0;
  for (const auto& v : cols) {
    all.segment(at, v.size()) = v;
    at += v.size();
  }
  ParameterSummary s;
  s.name = std::move(name);
  s.mean = all.mean();
  s.sd = std::sqrt(variance_of(all));
  s.ess = effective_sample_size(cols);
  s.mcse = s.ess > 0.0 ? s.sd / std::sqrt(s.ess) : std::numeric_limits<double>::infinity();
  return s;
}

std::vector<std::string> tuning_warnings(const std::vector<Chain>& chains) {
  std::vector<std::string> out;
  for (const auto& c : chains) {
    std::ostringstream msg;
    if (c.accept_rate < 0.6) {
      msg << "chain " << c.index << ": acceptance rate " << c.accept_rate
          << " is low; consider a smaller step size";
    } else if (c.accept_rate > 0.99) {
      msg << "chain " << c.index << ": acceptance rate " << c.accept_rate
          << " is very high; a larger step size would mix faster";
    }
    if (c.divergences > 0) {
      if (!msg.str().empty()) msg << "; ";
      msg << "chain " << c.index << ": " << c.divergences << " divergent trajectories";
    }
    if (!msg.str().empty()) out.push_back(msg.str());
  }
  return out;
}

void write_chains_csv(std::ostream& out, const std::vector<Chain>& chains,
                      const std::vector<std::string>& names) {
  out << "chain,iter";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  const auto old = out.precision(17);
  for (const auto& c : chains) {
    if (static_cast<std::size_t>(c.draws.cols()) != names.size()) {
      throw DomainError("write_chains_csv: column names do not match the draws");
    }
    for (Eigen::Index i = 0; i < c.draws.rows(); ++i) {
      out << c.index << ',' << i;
      for (Eigen::Index k = 0; k < c.draws.cols(); ++k) out << ',' << c.draws(i, k);
      out << '\n';
    }
  }
  out.precision(old);
}

}  // namespace robreg
