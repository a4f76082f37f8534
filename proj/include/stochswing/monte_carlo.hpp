#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>

#include <Eigen/Dense>

#include "stochswing/system.hpp"

namespace stochswing {

struct SimConfig {
  double step = 1e-3;
  double horizon = 200.0;
  std::optional<double> burn_in;  // defaults to horizon / 2
  std::size_t trajectories = 1000;
  std::uint64_t seed = 1;
  std::optional<Eigen::VectorXd> initial_state;  // defaults to zero
  unsigned threads = 0;                          // 0: hardware concurrency
  double divergence_threshold = 1e12;
  double tail_sample_interval = 1.0;  // time between samples kept for the tail diagnostic

  double effective_burn_in() const { return burn_in.value_or(0.5 * horizon); }
};

/// Throws std::invalid_argument unless h > 0, 0 <= burn-in < horizon and at
/// least one trajectory is requested.
void validate(const SimConfig& cfg, const StochasticSystem& sys);

struct EnergyEstimate {
  double mean = 0.0;       // ensemble mean of per-trajectory time averages of x̃ᵀCᵀCx̃
  double std_error = 0.0;  // standard deviation of those averages / √n
  std::size_t trajectories = 0;  // trajectories contributing to the mean
  std::size_t diverged = 0;
  std::size_t samples_per_trajectory = 0;
  // Hill estimate of the power-law tail index of the output energy. Values
  // below 1 mean the stationary second moment is infinite.
  double tail_index = 0.0;
  bool likely_unstable = false;  // ≥ 1% diverged, or tail_index < 1
};

/// One Euler–Maruyama step of the Itô system:
/// x⁺ = x + hÃ₀x + √h Σᵢ σ̂ᵢ ξᵢ Ãᵢx + √h B̃ ξ₀.
/// `gaussians` holds N additive draws (ξ₀) followed by one draw per noise term.
Eigen::VectorXd em_step(const StochasticSystem& sys, const Eigen::VectorXd& x, double h,
                        std::span<const double> gaussians);

/// Final state of trajectory `index` (same RNG stream as the ensemble run).
/// Returns std::nullopt if the trajectory diverged.
std::optional<Eigen::VectorXd> simulate_final_state(const StochasticSystem& sys,
                                                    const SimConfig& cfg, std::size_t index);

/// Steady-state output energy E[x̃ᵀCᵀCx̃], averaged over time after burn-in and
/// over the ensemble. Each trajectory has its own RNG stream derived from the
/// seed and its index, so results do not depend on the thread count.
EnergyEstimate estimate_output_energy(const StochasticSystem& sys, const OutputSpec& out,
                                      const SimConfig& cfg);

/// CSV dump of trajectory `index`: `t,x0,x1,...` every `stride` steps.
void write_trajectory_csv(std::ostream& os, const StochasticSystem& sys, const SimConfig& cfg,
                          std::size_t index, std::size_t stride);

}  // namespace stochswing
