#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "stochswing/grid.hpp"

namespace stochswing {

/// How the inverse-inertia disturbances of different buses are correlated.
///
/// Common: a single scalar Wiener process drives every noise-active bus,
/// scaled per bus by σ̂ᵢ. This is the structure under which the homogeneous
/// closed form and its stability bound are exact.
///
/// Independent: one Wiener process per noise-active bus.
enum class NoiseCoupling { Common, Independent };

/// Mean and variance of the inverse inertia M⁻¹ at one bus.
struct InverseInertiaParams {
  double m_hat_inv = 1.0;     // M̂⁻¹
  double sigma_hat_sq = 0.0;  // σ̂²
};

/// First-order (delta-method) moments of M⁻¹ from those of M:
/// M̂⁻¹ = 1/M̄, σ̂² = σ²/M̄⁴.
InverseInertiaParams delta_method(double inertia_mean, double inertia_std);

/// dx = Ã₀x dt + Σᵢ Ãᵢx dδᵢ + B̃ dW, with Var(dδᵢ) = variance·dt.
struct NoiseTerm {
  Eigen::MatrixXd a;
  double variance = 0.0;
};

/// Grounded stochastic swing dynamics with state x̃ = [θ̃; ω̃].
struct StochasticSystem {
  Eigen::MatrixXd a0;                  // 2N×2N
  std::vector<NoiseTerm> noise_terms;  // each 2N×2N
  Eigen::MatrixXd b;                   // 2N×N, [0; η M̃⁻¹]
  Eigen::Index dim_n = 0;

  // Per grounded bus, in reduced order.
  Eigen::VectorXd inverse_inertia;
  Eigen::VectorXd damping;
  Eigen::VectorXd sigma_hat_sq;  // zero where noise is inactive
  double eta = 1.0;
  NoiseCoupling coupling = NoiseCoupling::Common;

  Eigen::Index state_dim() const { return 2 * dim_n; }
};

/// Builds the grounded system. `params` holds one entry per bus of the full
/// grid (the grounded bus entry is discarded).
StochasticSystem assemble(const GridSpec& grid, const GroundedLaplacians& lap,
                          std::span<const InverseInertiaParams> params, double eta,
                          NoiseCoupling coupling = NoiseCoupling::Common);

/// Same, with per-bus parameters from delta_method(inertia_mean, inertia_std).
StochasticSystem assemble(const GridSpec& grid, const GroundedLaplacians& lap, double eta,
                          NoiseCoupling coupling = NoiseCoupling::Common);

/// Copy of `sys` with every multiplicative noise variance set to zero.
StochasticSystem without_multiplicative_noise(const StochasticSystem& sys);

/// Copy of `sys` with every σ̂ᵢ² multiplied by `factor` (≥ 0).
StochasticSystem scale_noise(const StochasticSystem& sys, double factor);

/// Copy of `grid` where every bus carries the same mean, std and damping.
GridSpec homogenized(const GridSpec& grid, double inertia_mean, double inertia_std,
                     double damping);

enum class OutputKind { PhaseCohesiveness, Frequency, PhaseAndFrequency, General };

/// Output weight y = Cx̃ represented only through CᵀC = diag(J, K).
struct OutputSpec {
  OutputKind kind = OutputKind::Frequency;
  double kappa = 1.0;
  Eigen::MatrixXd j;     // N×N angle weight
  Eigen::MatrixXd k;     // N×N frequency weight
  Eigen::MatrixXd gram;  // 2N×2N CᵀC
};

/// PhaseCohesiveness: diag(L̃_G, 0); Frequency: diag(0, I);
/// PhaseAndFrequency: diag(L̃_G, κ²I). Use general_output() for General.
OutputSpec output_gram(OutputKind kind, const GroundedLaplacians& lap, double kappa = 1.0);

/// diag(J, K); both must be symmetric positive definite.
OutputSpec general_output(const Eigen::MatrixXd& j, const Eigen::MatrixXd& k);

std::string_view to_string(OutputKind kind);
std::optional<OutputKind> parse_output_kind(std::string_view name);
std::string_view to_string(NoiseCoupling coupling);

/// Plain-text dump: a "name rows cols" header, then one row per line with
/// 17 significant digits.
void write_matrix(std::ostream& os, std::string_view name, const Eigen::MatrixXd& m);
void write_system(std::ostream& os, const StochasticSystem& sys);

}  // namespace stochswing
