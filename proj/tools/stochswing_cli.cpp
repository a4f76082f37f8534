#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "stochswing/commands.hpp"

namespace {

void add_common(CLI::App* app, stochswing::CommonOptions& opts) {
  app->add_option("--grid", opts.grid, "Grid description file")->required()->check(CLI::ExistingFile);
  app->add_option_function<std::string>(
         "--output",
         [&opts](const std::string& name) { opts.output = *stochswing::parse_output_kind(name); },
         "Performance output (default freq)")
      ->check(CLI::IsMember({"phase", "freq", "both"}));
  app->add_option("--kappa", opts.kappa, "Frequency weight for --output both")
      ->check(CLI::PositiveNumber);
  app->add_option("--eta", opts.eta, "Additive noise scale")->check(CLI::NonNegativeNumber);
  app->add_option("--mbar", opts.mbar, "Override every bus inertia mean")->check(CLI::PositiveNumber);
  app->add_option("--sigma-ratio", opts.sigma_ratio, "Override every bus inertia std as a fraction of its mean")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--beta", opts.beta, "Override every bus damping")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"H2 performance and mean-square stability of power grids with stochastic inertia"};
  app.require_subcommand(1);

  stochswing::AnalyzeOptions analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Stability verdict and H2 norms for one grid");
  add_common(analyze_cmd, analyze);
  analyze_cmd->add_flag("--dump-system", analyze.dump_system, "Print the assembled matrices");

  stochswing::SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Normalized H2 over inertia means and variances (CSV)");
  add_common(sweep_cmd, sweep);
  sweep_cmd->add_option("--mbar-list", sweep.mbar_list, "Inertia means to sweep")->delimiter(',');
  std::vector<double> ratio_range;
  sweep_cmd->add_option("--ratio-range", ratio_range, "min,max of sigma/M_bar")
      ->delimiter(',')
      ->expected(2);
  sweep_cmd->add_option("--ratio-steps", sweep.ratio_steps, "Number of sigma/M_bar points")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_flag("!--no-normalize", sweep.normalize, "Leave the normalized column empty");
  sweep_cmd->add_option("--csv", sweep.csv, "Write CSV here instead of stdout");
  sweep_cmd->add_option("--threads", sweep.threads, "Worker threads (0 = all cores)");

  stochswing::ValidateOptions validate;
  auto* validate_cmd = app.add_subcommand("validate", "Compare the analytic H2 norm with Monte Carlo");
  add_common(validate_cmd, validate);
  validate_cmd->add_option("--seed", validate.sim.seed, "Master RNG seed");
  validate_cmd->add_option("--trajectories", validate.sim.trajectories, "Ensemble size")
      ->check(CLI::PositiveNumber);
  validate_cmd->add_option("--step", validate.sim.step, "Euler-Maruyama step")
      ->check(CLI::PositiveNumber);
  validate_cmd->add_option("--horizon", validate.sim.horizon, "Simulated time per trajectory")
      ->check(CLI::PositiveNumber);
  validate_cmd->add_option("--burn-in", validate.sim.burn_in, "Discarded initial time (default horizon/2)")
      ->check(CLI::NonNegativeNumber);
  validate_cmd->add_option("--threads", validate.sim.threads, "Worker threads (0 = all cores)");
  validate_cmd->add_option("--dump", validate.dump, "Write trajectory 0 as CSV");
  validate_cmd->add_option("--dump-stride", validate.dump_stride, "Steps between dumped rows")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : stochswing::kExitUsage;
  }

  if (*analyze_cmd) return stochswing::run_analyze(analyze, std::cout, std::cerr);
  if (*sweep_cmd) {
    if (ratio_range.size() == 2) {
      sweep.ratio_min = ratio_range[0];
      sweep.ratio_max = ratio_range[1];
    }
    return stochswing::run_sweep(sweep, std::cout, std::cerr);
  }
  return stochswing::run_validate(validate, std::cout, std::cerr);
}
