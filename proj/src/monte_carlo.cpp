#include "stochswing/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include <boost/random/normal_distribution.hpp>

namespace stochswing {

namespace {

using Engine = std::mt19937_64;

Engine trajectory_engine(std::uint64_t seed, std::size_t index) {
  const auto idx = static_cast<std::uint64_t>(index);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32)};
  return Engine(seq);
}

std::size_t step_count(double span, double h) {
  return static_cast<std::size_t>(std::llround(span / h));
}

// Compressed rows of a dense matrix. The system matrices are mostly zero
// blocks, and at the sizes involved a plain loop over the stored entries beats
// a general matrix-vector product.
struct CompressedRows {
  std::vector<std::size_t> start;  // rows() + 1 offsets
  std::vector<Eigen::Index> col;
  std::vector<double> value;

  explicit CompressedRows(const Eigen::MatrixXd& m) {
    start.push_back(0);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (m(i, j) == 0.0) continue;
        col.push_back(j);
        value.push_back(m(i, j));
      }
      start.push_back(value.size());
    }
  }

  double row_dot(std::size_t i, const double* v) const {
    double s = 0.0;
    for (std::size_t e = start[i]; e < start[i + 1]; ++e) s += value[e] * v[col[e]];
    return s;
  }

  // vᵀ M v
  double quadratic(const double* v) const {
    double q = 0.0;
    for (std::size_t i = 0; i + 1 < start.size(); ++i) q += v[i] * row_dot(i, v);
    return q;
  }
};

// Precomputed, step-size-scaled matrices for repeated Euler–Maruyama steps.
class Stepper {
 public:
  Stepper(const StochasticSystem& sys, double h)
      : dim_(static_cast<std::size_t>(sys.state_dim())),
        transition_(Eigen::MatrixXd::Identity(sys.state_dim(), sys.state_dim()) + h * sys.a0),
        input_(std::sqrt(h) * sys.b),
        additive_(static_cast<std::size_t>(sys.b.cols())),
        next_(sys.state_dim()) {
    for (const NoiseTerm& term : sys.noise_terms) {
      if (term.variance > 0.0) diffusion_.emplace_back(std::sqrt(h * term.variance) * term.a);
    }
    multiplicative_.resize(diffusion_.size());
  }

  void step(Eigen::VectorXd& x, Engine& engine, boost::random::normal_distribution<double>& normal) {
    for (double& d : additive_) d = normal(engine);
    for (double& d : multiplicative_) d = normal(engine);
    const double* xs = x.data();
    for (std::size_t i = 0; i < dim_; ++i) {
      double acc = transition_.row_dot(i, xs) + input_.row_dot(i, additive_.data());
      for (std::size_t k = 0; k < diffusion_.size(); ++k) {
        acc += multiplicative_[k] * diffusion_[k].row_dot(i, xs);
      }
      next_[static_cast<Eigen::Index>(i)] = acc;
    }
    x.swap(next_);
  }

 private:
  std::size_t dim_;
  CompressedRows transition_;
  CompressedRows input_;
  std::vector<CompressedRows> diffusion_;
  std::vector<double> additive_;
  std::vector<double> multiplicative_;
  Eigen::VectorXd next_;
};

Eigen::VectorXd initial_state(const StochasticSystem& sys, const SimConfig& cfg) {
  if (!cfg.initial_state) return Eigen::VectorXd::Zero(sys.state_dim());
  return *cfg.initial_state;
}

// Runs one trajectory, calling observe(step_index, x) after every step.
// Returns false if the state left the divergence threshold.
template <typename Observer>
bool run_trajectory(Stepper& stepper, const SimConfig& cfg, const Eigen::VectorXd& x0,
                    std::size_t index, Observer&& observe) {
  Engine engine = trajectory_engine(cfg.seed, index);
  boost::random::normal_distribution<double> normal;
  Eigen::VectorXd x = x0;
  const std::size_t steps = step_count(cfg.horizon, cfg.step);
  const double limit_sq = cfg.divergence_threshold * cfg.divergence_threshold;
  for (std::size_t s = 1; s <= steps; ++s) {
    stepper.step(x, engine, normal);
    if (!(x.squaredNorm() <= limit_sq)) return false;
    observe(s, x);
  }
  return true;
}

double hill_tail_index(std::vector<double>& samples) {
  const std::size_t n = samples.size();
  if (n < 20) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t k = std::min(n - 1, std::max<std::size_t>(10, n / 50));
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(k),
                   samples.end(), std::greater<>());
  const double threshold = samples[k];
  if (!(threshold > 0.0)) return std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += std::log(samples[i] / threshold);
  return sum > 0.0 ? static_cast<double>(k) / sum : std::numeric_limits<double>::infinity();
}

}  // namespace

void validate(const SimConfig& cfg, const StochasticSystem& sys) {
  if (!(cfg.step > 0.0)) throw std::invalid_argument("simulation step must be positive");
  const double burn = cfg.effective_burn_in();
  if (!(cfg.horizon > 0.0) || !(burn >= 0.0) || !(burn < cfg.horizon)) {
    throw std::invalid_argument("simulation needs 0 <= burn-in < horizon");
  }
  if (step_count(cfg.horizon, cfg.step) <= step_count(burn, cfg.step)) {
    throw std::invalid_argument("no simulation steps after burn-in");
  }
  if (cfg.trajectories < 1) throw std::invalid_argument("need at least one trajectory");
  if (!(cfg.divergence_threshold > 0.0)) {
    throw std::invalid_argument("divergence threshold must be positive");
  }
  if (!(cfg.tail_sample_interval > 0.0)) {
    throw std::invalid_argument("tail sample interval must be positive");
  }
  if (cfg.initial_state && cfg.initial_state->size() != sys.state_dim()) {
    throw std::invalid_argument("initial state has the wrong dimension");
  }
}

Eigen::VectorXd em_step(const StochasticSystem& sys, const Eigen::VectorXd& x, double h,
                        std::span<const double> gaussians) {
  if (!(h > 0.0)) throw std::invalid_argument("em_step: step must be positive");
  const Eigen::Index n = sys.b.cols();
  if (x.size() != sys.state_dim() ||
      gaussians.size() != static_cast<std::size_t>(n) + sys.noise_terms.size()) {
    throw std::invalid_argument("em_step: dimension mismatch");
  }
  const double sqrt_h = std::sqrt(h);
  const Eigen::Map<const Eigen::VectorXd> additive(gaussians.data(), n);
  Eigen::VectorXd next = x + h * (sys.a0 * x) + sqrt_h * (sys.b * additive);
  for (std::size_t i = 0; i < sys.noise_terms.size(); ++i) {
    const NoiseTerm& term = sys.noise_terms[i];
    next += std::sqrt(term.variance) * sqrt_h * gaussians[static_cast<std::size_t>(n) + i] *
            (term.a * x);
  }
  return next;
}

std::optional<Eigen::VectorXd> simulate_final_state(const StochasticSystem& sys,
                                                    const SimConfig& cfg, std::size_t index) {
  validate(cfg, sys);
  Stepper stepper(sys, cfg.step);
  Eigen::VectorXd last;
  const bool ok = run_trajectory(stepper, cfg, initial_state(sys, cfg), index,
                                 [&](std::size_t, const Eigen::VectorXd& x) { last = x; });
  if (!ok) return std::nullopt;
  return last;
}

EnergyEstimate estimate_output_energy(const StochasticSystem& sys, const OutputSpec& out,
                                      const SimConfig& cfg) {
  validate(cfg, sys);
  if (out.gram.rows() != sys.state_dim() || out.gram.cols() != sys.state_dim()) {
    throw std::invalid_argument("estimate_output_energy: output dimension mismatch");
  }
  const std::size_t n_traj = cfg.trajectories;
  const std::size_t burn_steps = step_count(cfg.effective_burn_in(), cfg.step);
  const std::size_t total_steps = step_count(cfg.horizon, cfg.step);
  const std::size_t window = total_steps - burn_steps;
  const std::size_t tail_stride =
      std::max<std::size_t>(1, step_count(cfg.tail_sample_interval, cfg.step));
  const Eigen::VectorXd x0 = initial_state(sys, cfg);

  struct TrajectoryResult {
    double time_average = 0.0;
    bool diverged = false;
    std::vector<double> tail_samples;
  };
  std::vector<TrajectoryResult> results(n_traj);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    Stepper stepper(sys, cfg.step);
    const CompressedRows gram(out.gram);
    for (std::size_t t = next++; t < n_traj; t = next++) {
      TrajectoryResult& r = results[t];
      double sum = 0.0;
      std::size_t until_tail_sample = tail_stride;
      const bool ok = run_trajectory(stepper, cfg, x0, t, [&](std::size_t s, const Eigen::VectorXd& x) {
        if (s <= burn_steps) return;
        const double energy = gram.quadratic(x.data());
        sum += energy;
        if (--until_tail_sample == 0) {
          r.tail_samples.push_back(energy);
          until_tail_sample = tail_stride;
        }
      });
      r.diverged = !ok;
      r.time_average = ok ? sum / static_cast<double>(window) : 0.0;
      if (!ok) r.tail_samples.clear();
    }
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::size_t>(cfg.threads ? cfg.threads : hw, n_traj));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }

  // Reduce in trajectory order so the result is independent of scheduling.
  EnergyEstimate est;
  est.samples_per_trajectory = window;
  std::vector<double> tail;
  double sum = 0.0;
  for (const TrajectoryResult& r : results) {
    if (r.diverged) {
      ++est.diverged;
      continue;
    }
    ++est.trajectories;
    sum += r.time_average;
    tail.insert(tail.end(), r.tail_samples.begin(), r.tail_samples.end());
  }
  if (est.trajectories > 0) {
    est.mean = sum / static_cast<double>(est.trajectories);
    double ss = 0.0;
    for (const TrajectoryResult& r : results) {
      if (!r.diverged) ss += (r.time_average - est.mean) * (r.time_average - est.mean);
    }
    est.std_error = est.trajectories > 1
                        ? std::sqrt(ss / static_cast<double>(est.trajectories - 1) /
                                    static_cast<double>(est.trajectories))
                        : 0.0;
  }
  est.tail_index = hill_tail_index(tail);
  const bool many_diverged = 100 * est.diverged >= n_traj;
  est.likely_unstable = many_diverged || est.tail_index < 1.0;
  return est;
}

void write_trajectory_csv(std::ostream& os, const StochasticSystem& sys, const SimConfig& cfg,
                          std::size_t index, std::size_t stride) {
  validate(cfg, sys);
  if (stride == 0) throw std::invalid_argument("trajectory dump stride must be positive");
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << std::setprecision(17) << 't';
  for (Eigen::Index i = 0; i < sys.state_dim(); ++i) os << ",x" << i;
  os << '\n';
  auto row = [&](double t, const Eigen::VectorXd& x) {
    os << t;
    for (Eigen::Index i = 0; i < x.size(); ++i) os << ',' << x(i);
    os << '\n';
  };
  const Eigen::VectorXd x0 = initial_state(sys, cfg);
  row(0.0, x0);
  Stepper stepper(sys, cfg.step);
  run_trajectory(stepper, cfg, x0, index, [&](std::size_t s, const Eigen::VectorXd& x) {
    if (s % stride == 0) row(static_cast<double>(s) * cfg.step, x);
  });
  os.flags(flags);
  os.precision(precision);
}

}  // namespace stochswing
