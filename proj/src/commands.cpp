#include "stochswing/commands.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

namespace stochswing {

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string short_num(double v) {
  if (std::isinf(v)) return v > 0 ? "unbounded" : "-inf";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

GridSpec apply_overrides(GridSpec grid, const CommonOptions& opts) {
  for (Bus& bus : grid.buses) {
    if (opts.mbar) bus.inertia_mean = *opts.mbar;
    if (opts.sigma_ratio) bus.inertia_std = *opts.sigma_ratio * bus.inertia_mean;
    if (opts.beta) bus.damping = *opts.beta;
  }
  return grid;
}

Eigen::VectorXd sorted_eigenvalues(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues();
}

void print_eigenvalues(std::ostream& os, const char* label, const Eigen::MatrixXd& m) {
  const Eigen::VectorXd ev = sorted_eigenvalues(m);
  os << label << ":";
  for (Eigen::Index i = 0; i < ev.size(); ++i) os << ' ' << short_num(ev(i));
  os << "  (min " << short_num(ev.minCoeff()) << ", max " << short_num(ev.maxCoeff()) << ")\n";
}

std::vector<double> ratio_grid(const SweepOptions& opts) {
  std::vector<double> ratios;
  if (opts.ratio_steps == 1) return {opts.ratio_min};
  for (std::size_t i = 0; i < opts.ratio_steps; ++i) {
    ratios.push_back(opts.ratio_min + (opts.ratio_max - opts.ratio_min) * static_cast<double>(i) /
                                          static_cast<double>(opts.ratio_steps - 1));
  }
  return ratios;
}

}  // namespace

Analysis prepare(const GridFile& file, const CommonOptions& opts) {
  Analysis a;
  a.file = file;
  a.file.grid = apply_overrides(file.grid, opts);
  if (opts.kappa) a.file.kappa = *opts.kappa;
  if (opts.eta) a.file.eta = *opts.eta;
  a.lap = grounded_laplacians(a.file.grid);
  a.sys = assemble(a.file.grid, a.lap, a.file.eta, a.file.coupling);
  a.out = output_gram(opts.output, a.lap, a.file.kappa);
  return a;
}

std::vector<SweepRow> compute_sweep(const GridFile& file, const SweepOptions& opts,
                                    std::ostream* warn) {
  if (opts.mbar_list.empty()) throw std::invalid_argument("sweep: empty M_bar list");
  if (opts.ratio_steps == 0) throw std::invalid_argument("sweep: ratio steps must be positive");
  if (!(opts.ratio_min >= 0.0) || !(opts.ratio_max >= opts.ratio_min)) {
    throw std::invalid_argument("sweep: need 0 <= ratio min <= ratio max");
  }
  for (double m : opts.mbar_list) {
    if (!(m > 0.0)) throw std::invalid_argument("sweep: M_bar values must be positive");
  }

  const double beta = opts.beta.value_or(1.0);
  const std::vector<double> ratios = ratio_grid(opts);
  std::vector<SweepRow> rows;
  for (double m : opts.mbar_list) {
    for (double r : ratios) {
      SweepRow row;
      row.m_bar = m;
      row.sigma_ratio = r;
      rows.push_back(row);
    }
  }

  GridFile base = file;
  if (opts.kappa) base.kappa = *opts.kappa;
  if (opts.eta) base.eta = *opts.eta;
  const GroundedLaplacians lap = grounded_laplacians(base.grid);
  const OutputSpec out = output_gram(opts.output, lap, base.kappa);

  // Homogeneity is a property of the topology and noise flags, not of the
  // grid point, so probing one point decides the route for all of them.
  const bool closed_form = closed_form_applies(
      assemble(homogenized(base.grid, 1.0, 0.1, beta), lap, base.eta, base.coupling));
  if (!closed_form && warn) {
    *warn << "warning: closed form does not apply to this grid (heterogeneous noise or "
             "independent coupling); using the vectorized solver without a cross-check\n";
  }

  auto evaluate = [&](SweepRow& row) {
    const double sigma = row.sigma_ratio * row.m_bar;
    row.sigma_hat_sq = delta_method(row.m_bar, sigma).sigma_hat_sq;
    H2Report report;
    H2Report baseline;
    if (closed_form) {
      const HomogeneousParams p{row.m_bar, beta, row.sigma_hat_sq, base.eta};
      HomogeneousParams p0 = p;
      p0.sigma_hat_sq = 0.0;
      report = h2_squared_closed_form(p, lap, out);
      baseline = h2_squared_closed_form(p0, lap, out);
      row.ms_stable = report.bounded();
    } else {
      const GridSpec grid = homogenized(base.grid, row.m_bar, sigma, beta);
      const StochasticSystem sys = assemble(grid, lap, base.eta, base.coupling);
      report = h2_squared_vectorized(sys, out);
      baseline = h2_squared_vectorized(without_multiplicative_noise(sys), out);
      row.ms_stable = report.stability->ms_stable;
    }
    if (!baseline.bounded()) {
      throw std::logic_error("sweep: additive-only baseline is unbounded for a connected grid");
    }
    row.method = report.method;
    row.h2_sq = report.h2_squared;
    row.h2_sq_baseline = baseline.h2_squared;
    if (opts.normalize) row.normalized = row.h2_sq / row.h2_sq_baseline;
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const auto n_threads =
      static_cast<unsigned>(std::min<std::size_t>(opts.threads ? opts.threads : hw, rows.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size() && !failed; i = next++) {
      try {
        evaluate(rows[i]);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "M_bar,sigma_ratio,sigma_hat_sq,h2_sq,h2_sq_baseline,normalized,ms_stable\n";
  for (const SweepRow& r : rows) {
    os << num(r.m_bar) << ',' << num(r.sigma_ratio) << ',' << num(r.sigma_hat_sq) << ','
       << num(r.h2_sq) << ',' << num(r.h2_sq_baseline) << ','
       << (r.normalized ? num(*r.normalized) : std::string()) << ',' << (r.ms_stable ? 1 : 0)
       << '\n';
  }
}

int run_analyze(const AnalyzeOptions& opts, std::ostream& out, std::ostream& err) {
  Analysis a;
  try {
    a = prepare(load_grid_file(opts.grid), opts);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  const GridSpec& grid = a.file.grid;
  out << "grid: " << opts.grid.string() << "\n"
      << "buses: " << grid.bus_count() << "  lines: " << grid.lines.size()
      << "  ground bus: " << grid.ground_bus << "  noise coupling: " << to_string(a.file.coupling)
      << "\n"
      << "output: " << to_string(a.out.kind);
  if (a.out.kind == OutputKind::PhaseAndFrequency) out << " (kappa " << short_num(a.out.kappa) << ")";
  out << "  eta: " << short_num(a.file.eta) << "\n";
  print_eigenvalues(out, "grounded L_B eigenvalues", a.lap.susceptance);
  print_eigenvalues(out, "grounded L_G eigenvalues", a.lap.conductance);
  if (opts.dump_system) write_system(out, a.sys);

  const auto homogeneous = homogeneous_params(a.sys);
  const bool closed_form = closed_form_applies(a.sys);
  if (homogeneous) {
    const double crit = sigma_sq_critical(homogeneous->m_hat, homogeneous->beta, a.lap);
    out << "homogeneous: M_hat " << short_num(homogeneous->m_hat) << "  beta "
        << short_num(homogeneous->beta) << "  sigma_hat_sq "
        << short_num(homogeneous->sigma_hat_sq) << "\n";
    if (closed_form) {
      out << "sigma_hat_sq critical: " << short_num(crit) << "\n"
          << "lambda_max(L_B) bound: " << short_num(laplacian_eig_bound(*homogeneous))
          << "  (actual " << short_num(sorted_eigenvalues(a.lap.susceptance).maxCoeff())
          << ")\n";
    }
  } else {
    out << "homogeneous: no\n";
  }
  if (!closed_form) {
    out << "warning: closed form does not apply (heterogeneous parameters or independent "
           "noise); no cross-check available\n";
  }

  const H2Report vec = h2_squared_vectorized(a.sys, a.out);
  out << "ms-stability: " << (vec.stability->ms_stable ? "MS-stable" : "MS-unstable") << " ("
      << vec.stability->margin << ")\n";
  out << "h2_sq vectorized: " << short_num(vec.h2_squared) << "\n";
  if (vec.gramian) {
    out << "  gramian residual " << short_num(vec.gramian->residual_norm) << ", psd "
        << (vec.gramian->psd ? "yes" : "no") << "\n";
  }
  if (closed_form) {
    const H2Report cf = h2_squared_closed_form(*homogeneous, a.lap, a.out);
    out << "h2_sq closed-form: " << short_num(cf.h2_squared) << "\n";
    if (cf.bounded() && vec.bounded()) {
      out << "relative difference: "
          << short_num(std::abs(cf.h2_squared - vec.h2_squared) / vec.h2_squared) << "\n";
    }
  }
  const H2Report base = h2_squared_vectorized(without_multiplicative_noise(a.sys), a.out);
  out << "h2_sq additive-only baseline: " << short_num(base.h2_squared) << "\n";
  if (base.bounded() && base.h2_squared > 0.0) {
    out << "normalized: " << short_num(vec.h2_squared / base.h2_squared) << "\n";
  }
  return kExitOk;
}

int run_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err) {
  std::vector<SweepRow> rows;
  try {
    rows = compute_sweep(load_grid_file(opts.grid), opts, &err);
  } catch (const std::logic_error& e) {
    err << "error: " << e.what() << '\n';
    return dynamic_cast<const std::invalid_argument*>(&e) ? kExitUsage : kExitAnalysis;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (opts.csv) {
    std::ofstream file(*opts.csv);
    if (!file) {
      err << "error: cannot write '" << opts.csv->string() << "'\n";
      return kExitUsage;
    }
    write_sweep_csv(file, rows);
  } else {
    write_sweep_csv(out, rows);
  }
  return kExitOk;
}

int run_validate(const ValidateOptions& opts, std::ostream& out, std::ostream& err) {
  Analysis a;
  try {
    a = prepare(load_grid_file(opts.grid), opts);
    validate(opts.sim, a.sys);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  const H2Report analytic = h2_squared_vectorized(a.sys, a.out);
  if (!analytic.stability->ms_stable) {
    out << "refusing to validate: system is MS-unstable (" << analytic.stability->margin << ")\n";
    if (const auto p = homogeneous_params(a.sys); p && closed_form_applies(a.sys)) {
      out << "sigma_hat_sq " << short_num(p->sigma_hat_sq) << " is not below sigma_hat_sq critical "
          << short_num(sigma_sq_critical(p->m_hat, p->beta, a.lap)) << "\n";
    }
    return kExitAnalysis;
  }

  if (opts.dump) {
    std::ofstream file(*opts.dump);
    if (!file) {
      err << "error: cannot write '" << opts.dump->string() << "'\n";
      return kExitUsage;
    }
    write_trajectory_csv(file, a.sys, opts.sim, 0, opts.dump_stride);
  }

  const EnergyEstimate mc = estimate_output_energy(a.sys, a.out, opts.sim);
  out << "h2_sq analytic (vectorized): " << short_num(analytic.h2_squared) << "\n";
  if (closed_form_applies(a.sys)) {
    out << "h2_sq analytic (closed-form): "
        << short_num(h2_squared_closed_form(*homogeneous_params(a.sys), a.lap, a.out).h2_squared)
        << "\n";
  }
  out << "monte carlo: " << short_num(mc.mean) << " +/- " << short_num(mc.std_error) << "  ("
      << mc.trajectories << " trajectories, " << mc.diverged << " diverged, tail index "
      << short_num(mc.tail_index) << ")\n";
  if (mc.likely_unstable) {
    out << "monte carlo indicates mean-square instability\n";
    return kExitValidation;
  }
  const double diff = mc.mean - analytic.h2_squared;
  const double z = mc.std_error > 0.0 ? diff / mc.std_error : (diff == 0.0 ? 0.0 : kUnbounded);
  out << "z-score: " << short_num(z) << "\n";
  if (!(std::abs(z) <= 4.0)) {
    out << "FAIL: |z| > 4\n";
    return kExitValidation;
  }
  out << "OK\n";
  return kExitOk;
}

}  // namespace stochswing
