#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "robreg/log_density.hpp"

namespace robreg {

struct HmcConfig {
  double step_size = 0.05;
  int leapfrog_steps = 30;
  int warmup = 2000;
  int samples = 20000;
  int chains = 4;
  std::uint64_t seed = 20190101;
  /// Trajectory lengths are drawn uniformly from [ceil(0.8 L), ceil(1.2 L)].
  bool jitter = true;
  /// Energy error beyond which a trajectory counts as divergent.
  double divergence_threshold = 1000.0;
  /// Fraction of divergent trajectories that aborts sampling.
  double max_divergent_fraction = 0.10;
};

void validate(const HmcConfig& config);

struct Chain {
  Eigen::MatrixXd draws;  // samples x dimension, post warmup
  double accept_rate = 0.0;
  int divergences = 0;
  std::uint64_t seed = 0;
  int index = 0;
};

/// One leapfrog integration of `steps` steps with identity mass. Position,
/// momentum and gradient are updated in place; returns the final log density.
double leapfrog(const LogDensityModel& model, std::span<double> position,
                std::span<double> momentum, std::span<double> gradient, double step_size,
                int steps);

/// Runs config.chains independent chains, one thread each, starting at `init`.
/// The chain-to-seed mapping is fixed, so results do not depend on scheduling.
std::vector<Chain> sample(const LogDensityModel& model, std::span<const double> init,
                          const HmcConfig& config);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double ess = 0.0;
  double mcse = 0.0;
};

/// Effective sample size from the multi-chain initial monotone sequence
/// estimator, capped at the total number of draws.
double effective_sample_size(const std::vector<Eigen::VectorXd>& chains);

/// Summary of column `column` of every chain.
ParameterSummary summarize(const std::vector<Chain>& chains, Eigen::Index column,
                           std::string name);

/// Tuning diagnostics: low or high acceptance, divergences.
std::vector<std::string> tuning_warnings(const std::vector<Chain>& chains);

/// Writes `chain,iter,<names...>` rows.
void write_chains_csv(std::ostream& out, const std::vector<Chain>& chains,
                      const std::vector<std::string>& names);

}  // namespace robreg
