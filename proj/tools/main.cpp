// robreg: fit regressions with heavy-tailed priors, reproduce the conflict
// sweeps, and run the limit diagnostics.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cli/commands.hpp"
#include "robreg/errors.hpp"

namespace {

using namespace robreg;
using namespace robreg::cli;

// Resolved configuration of a subcommand as comment lines.
std::vector<std::string> config_comments(const CLI::App& app) {
  std::vector<std::string> lines{"robreg " + app.get_name()};
  std::istringstream in(app.config_to_str(true, false));
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line.rfind("config", 0) == 0) continue;
    lines.push_back(line);
  }
  return lines;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  return out;
}

void add_hmc_options(CLI::App& app, HmcConfig& hmc) {
  app.add_option("--step-size", hmc.step_size, "Leapfrog step size")->capture_default_str();
  app.add_option("--leapfrog", hmc.leapfrog_steps, "Nominal leapfrog steps per trajectory")
      ->capture_default_str();
  app.add_option("--warmup", hmc.warmup, "Warm-up iterations per chain")->capture_default_str();
  app.add_option("--samples", hmc.samples, "Kept iterations per chain")->capture_default_str();
  app.add_option("--chains", hmc.chains, "Number of chains")->capture_default_str();
  app.add_option("--seed", hmc.seed, "Random seed")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian linear regression with heavy-tailed priors"};
  app.require_subcommand(1);
  // Keys are given per subcommand, as "[sweep]" sections or "sweep.axis=..." lines.
  app.set_config("--config", "", "Key=value configuration file; flags override its values");
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);

  // fit
  FitOptions fit;
  std::string fit_out;
  std::string chain_out;
  auto* fit_cmd = app.add_subcommand("fit", "Sample the posterior of a CSV data set");
  fit_cmd->add_option("--data", fit.data_path, "CSV with a header and a column named y")
      ->required()
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--prior", fit.priors,
                      "Prior per covariate, in column order: flat | normal,MU,LAMBDA | "
                      "student[:DOF],MU,LAMBDA | lptn[:RHO],MU,LAMBDA | ctn[:VARRHO],MU,LAMBDA")
      ->delimiter(';');
  fit_cmd->add_option("--intercept-prior", fit.intercept_prior, "Prior on the intercept")
      ->capture_default_str();
  fit_cmd->add_option("--sigma-prior", fit.sigma_prior, "jeffreys | inverse-gamma:SHAPE,SCALE")
      ->capture_default_str();
  fit_cmd->add_option("--sigma-power", fit.sigma_power, "Multiply the sigma prior by sigma^K")
      ->capture_default_str();
  fit_cmd->add_flag("--scale-by-sqrt-n", fit.scale_by_sqrt_n,
                    "Multiply every prior scale lambda by sqrt(n)");
  fit_cmd->add_option("--out", fit_out, "Summary CSV")->required();
  fit_cmd->add_option("--chain-out", chain_out, "Optional CSV dump of every draw");
  add_hmc_options(*fit_cmd, fit.hmc);

  // sweep
  SweepOptions sweep;
  std::string sweep_axis = "mu2";
  std::vector<std::string> sweep_grid;
  std::string sweep_method = "quad";
  std::string sweep_out;
  auto* sweep_cmd = app.add_subcommand("sweep", "Posterior mean and sd of the slope along a grid");
  sweep_cmd->add_option("--axis", sweep_axis, "mu2 or lambda2")
      ->check(CLI::IsMember({"mu2", "lambda2"}))
      ->capture_default_str();
  sweep_cmd->add_option("--grid", sweep_grid,
                        "START:STOP:STEP or a list (default 0:2:0.05 for mu2, "
                        "0.02:2:0.04 plus 2 for lambda2)")
      ->delimiter(',');
  sweep_cmd->add_option("--families", sweep.families, "Families to include")
      ->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_option("--hyper", sweep.hyper,
                        "Hyperparameter grid for a family, e.g. student=1,4,10 (repeatable)");
  sweep_cmd->add_option("--n", sweep.n, "Number of observations")->capture_default_str();
  sweep_cmd->add_option("--mu2", sweep.fixed_mu2, "Prior location for the lambda2 sweep")
      ->capture_default_str();
  sweep_cmd->add_option("--lambda2", sweep.fixed_lambda2, "Prior scale for the mu2 sweep")
      ->capture_default_str();
  sweep_cmd->add_option("--method", sweep_method, "quad or hmc")
      ->check(CLI::IsMember({"quad", "hmc"}))
      ->capture_default_str();
  sweep_cmd->add_option("--threads", sweep.threads, "Worker threads, 0 for all cores")
      ->capture_default_str();
  sweep_cmd->add_option("--out", sweep_out, "Output CSV")->required();
  add_hmc_options(*sweep_cmd, sweep.hmc);

  // check
  std::string check_grids;
  std::string check_out;
  std::string series_dir;
  bool skip_quadrature = false;
  auto* check_cmd = app.add_subcommand("check", "Run the limit diagnostics");
  check_cmd->add_option("--grids", check_grids,
                        "pointwise=LO:HI,quadrature=LO:HI (powers of ten; default "
                        "pointwise=1e1:1e8,quadrature=1:1e4)");
  check_cmd->add_flag("--pointwise-only", skip_quadrature, "Skip quadrature-based checks");
  check_cmd->add_option("--out", check_out, "Report CSV")->required();
  check_cmd->add_option("--series-dir", series_dir, "Directory for one CSV per ratio series");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (fit_cmd->parsed()) {
      const auto report = run_fit(fit);
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
      auto out = open_output(fit_out);
      write_fit_csv(out, report, config_comments(*fit_cmd));
      if (!chain_out.empty()) {
        auto chains = open_output(chain_out);
        for (const auto& c : config_comments(*fit_cmd)) chains << "# " << c << '\n';
        write_chains_csv(chains, report.chains, report.names);
      }
    } else if (sweep_cmd->parsed()) {
      sweep.axis = sweep_axis == "mu2" ? SweepAxis::mu2 : SweepAxis::lambda2;
      sweep.method = sweep_method == "quad" ? SweepMethod::quadrature : SweepMethod::hmc;
      if (!sweep_grid.empty()) {
        // A list may arrive as several values, e.g. from a config file.
        std::string joined;
        for (const auto& g : sweep_grid) joined += (joined.empty() ? "" : ",") + g;
        sweep.grid = parse_grid(joined);
      }
      const auto rows = run_sweep(sweep);
      auto comments = config_comments(*sweep_cmd);
      std::ostringstream grid_line;
      grid_line << "resolved_grid=";
      const auto grid = sweep.grid.empty() ? default_grid(sweep.axis) : sweep.grid;
      for (std::size_t i = 0; i < grid.size(); ++i) grid_line << (i ? ";" : "") << grid[i];
      comments.push_back(grid_line.str());
      comments.push_back("prior_scale=lambda2*sqrt(n)");
      auto out = open_output(sweep_out);
      write_sweep_csv(out, sweep.axis, rows, comments);
    } else if (check_cmd->parsed()) {
      CheckOptions options = check_grids.empty() ? CheckOptions{} : parse_check_grids(check_grids);
      options.quadrature = !skip_quadrature;
      std::vector<RatioSeries> series;
      const auto results = run_check(options, &series);
      auto out = open_output(check_out);
      const auto comments = config_comments(*check_cmd);
      write_check_csv(out, results, comments);
      if (!series_dir.empty()) {
        std::filesystem::create_directories(series_dir);
        for (const auto& s : series) {
          std::string name = s.name + "_" + s.family;
          for (char& c : name) {
            if (c == '(' || c == ')' || c == '.') c = '_';
          }
          auto f = open_output((std::filesystem::path(series_dir) / (name + ".csv")).string());
          write_csv(f, s, comments);
        }
      }
      bool all_pass = true;
      for (const auto& r : results) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.claim << " (error " << r.error
                  << ", threshold " << r.threshold << ")\n";
        all_pass = all_pass && r.pass;
      }
      if (!all_pass) return kNumericalFailure;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kSuccess;
}
