#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string_view>

#include <Eigen/Dense>

#include "stochswing/grid.hpp"
#include "stochswing/lyapunov.hpp"
#include "stochswing/system.hpp"

namespace stochswing {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

enum class H2Method { ClosedForm, Vectorized, MonteCarlo };

std::string_view to_string(H2Method method);

/// Squared H2 norm. An MS-unstable system reports h2_squared = kUnbounded
/// instead of failing, so sweeps can cross the stability boundary.
struct H2Report {
  double h2_squared = 0.0;
  H2Method method = H2Method::Vectorized;
  OutputKind output = OutputKind::Frequency;
  std::optional<StabilityVerdict> stability;  // set by the vectorized path
  std::optional<GramianSolution> gramian;     // set by the vectorized path when bounded
  std::optional<double> normalized;           // h2² / h2²(σ̂² = 0), when requested

  bool bounded() const { return std::isfinite(h2_squared); }
};

/// Uniform inertia, damping and inverse-inertia variance over all grounded buses.
struct HomogeneousParams {
  double m_hat = 1.0;  // M̂
  double beta = 1.0;
  double sigma_hat_sq = 0.0;
  double eta = 1.0;
};

/// Extracts the uniform parameters when every grounded bus agrees on M̂⁻¹, β
/// and σ̂² within `rel_tol`.
std::optional<HomogeneousParams> homogeneous_params(const StochasticSystem& sys,
                                                    double rel_tol = 1e-12);

/// True when the homogeneous closed form describes `sys` exactly: uniform
/// parameters and either a common disturbance, no multiplicative noise, or
/// a single grounded bus.
bool closed_form_applies(const StochasticSystem& sys);

/// P̃ = (2β/M̂ - σ̂²β²) I - σ̂² M̂ L̃_B.
Eigen::MatrixXd p_matrix(const HomogeneousParams& p, const Eigen::MatrixXd& susceptance);

/// Tr(B̃ᵀ Q̃ B̃) with Q̃ from the generalized Lyapunov equation.
H2Report h2_squared_vectorized(const StochasticSystem& sys, const OutputSpec& out,
                               const LyapunovTolerances& tol = {});

/// η²/M̂² · Tr[P̃⁻¹ (M̂ J L̃_B⁻¹ + K)]; unbounded when P̃ is not positive definite.
H2Report h2_squared_closed_form(const HomogeneousParams& p, const GroundedLaplacians& lap,
                                const OutputSpec& out);

/// Largest σ̂² keeping the homogeneous system mean-square stable (exclusive):
/// 2β / (M̂ (β² + λ_max(L̃_B) M̂)).
double sigma_sq_critical(double m_hat, double beta, const GroundedLaplacians& lap);

/// Upper bound on λ_max(L_B) for mean-square stability at the given σ̂²:
/// (2β - M̂σ̂²β²) / (σ̂² M̂²). Unbounded when σ̂² = 0.
double laplacian_eig_bound(const HomogeneousParams& p);

/// h2² relative to the same system with σ̂² = 0 (vectorized path).
double normalized_h2(const StochasticSystem& sys, const OutputSpec& out);

/// h2² relative to σ̂² = 0 (closed-form path).
double normalized_h2(const HomogeneousParams& p, const GroundedLaplacians& lap,
                     const OutputSpec& out);

}  // namespace stochswing
