#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

#include "stochswing/grid_io.hpp"
#include "stochswing/h2.hpp"
#include "stochswing/monte_carlo.hpp"
#include "stochswing/system.hpp"

namespace stochswing {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,      // bad arguments, unreadable or invalid grid file
  kExitAnalysis = 2,   // instability where stability is required
  kExitValidation = 3  // Monte Carlo disagrees with the analytic value
};

/// Options shared by every subcommand. The optional overrides replace the
/// per-bus values from the grid file on every bus.
struct CommonOptions {
  std::filesystem::path grid;
  OutputKind output = OutputKind::Frequency;
  std::optional<double> kappa;        // overrides [system] kappa
  std::optional<double> eta;          // overrides [system] eta
  std::optional<double> mbar;         // inertia_mean
  std::optional<double> sigma_ratio;  // inertia_std / inertia_mean
  std::optional<double> beta;         // damping
};

struct AnalyzeOptions : CommonOptions {
  bool dump_system = false;
};

/// Damping comes from CommonOptions::beta (default 1); --mbar and
/// --sigma-ratio are ignored since the sweep sets them per point.
struct SweepOptions : CommonOptions {
  std::vector<double> mbar_list{1.0, 3.0, 5.0};
  double ratio_min = 0.0;
  double ratio_max = 0.4;
  std::size_t ratio_steps = 41;
  bool normalize = true;
  std::optional<std::filesystem::path> csv;  // stdout when unset
  unsigned threads = 0;
};

struct ValidateOptions : CommonOptions {
  SimConfig sim;
  std::optional<std::filesystem::path> dump;  // CSV of trajectory 0
  std::size_t dump_stride = 100;
};

/// Everything derived from a grid file plus overrides.
struct Analysis {
  GridFile file;
  GroundedLaplacians lap;
  StochasticSystem sys;
  OutputSpec out;
};

Analysis prepare(const GridFile& file, const CommonOptions& opts);

struct SweepRow {
  double m_bar = 0.0;
  double sigma_ratio = 0.0;
  double sigma_hat_sq = 0.0;
  double h2_sq = 0.0;
  double h2_sq_baseline = 0.0;
  std::optional<double> normalized;
  bool ms_stable = false;
  H2Method method = H2Method::ClosedForm;
};

/// One row per (M̄, σ/M̄) pair, M̄-major, in input order. Grid points are
/// evaluated concurrently. `warn` receives a note when the closed form does
/// not apply and the vectorized solver is used instead.
std::vector<SweepRow> compute_sweep(const GridFile& file, const SweepOptions& opts,
                                    std::ostream* warn = nullptr);

/// Header plus one line per row; doubles with 17 significant digits,
/// unbounded values as `inf`, ms_stable as 1/0.
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

int run_analyze(const AnalyzeOptions& opts, std::ostream& out, std::ostream& err);
int run_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err);
int run_validate(const ValidateOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace stochswing
