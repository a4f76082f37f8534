#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "stochswing/system.hpp"

namespace stochswing {

/// The requested Gramian does not exist: the (generalized) Lyapunov operator
/// has an eigenvalue in the closed right half-plane.
class StabilityError : public std::runtime_error {
 public:
  StabilityError(const std::string& what, double spectral_abscissa)
      : std::runtime_error(what), spectral_abscissa_(spectral_abscissa) {}

  double spectral_abscissa() const { return spectral_abscissa_; }

 private:
  double spectral_abscissa_;
};

struct LyapunovTolerances {
  double residual = 1e-9;      // relative Frobenius residual
  double psd_slack = 1e-9;     // λ_min(Q) ≥ -psd_slack·‖Q‖
  double abscissa_tie = 1e-8;  // |abscissa| ≤ tie counts as unstable
};

struct GramianSolution {
  Eigen::MatrixXd q;
  double residual_norm = 0.0;  // ‖L(Q) + rhs‖_F / ‖rhs‖_F (absolute if rhs = 0)
  double asymmetry = 0.0;      // ‖Q - Qᵀ‖_F / ‖Q‖_F before symmetrisation
  bool psd = false;
};

struct StabilityVerdict {
  bool ms_stable = false;
  double spectral_abscissa = 0.0;
  std::string margin;  // human-readable description of the abscissa
};

/// Spectral abscissa (largest real part of the eigenvalues) of a square matrix.
double spectral_abscissa(const Eigen::MatrixXd& m);

/// Solves AᵀQ + QA = -rhs by a complex Schur (Bartels–Stewart) sweep.
/// Throws StabilityError unless A is Hurwitz.
GramianSolution solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& rhs,
                               const LyapunovTolerances& tol = {});

/// K = Ã₀ᵀ⊗I + I⊗Ã₀ᵀ + Σᵢ σ̂ᵢ² Ãᵢᵀ⊗Ãᵢᵀ, so that vec(L(Q)) = K vec(Q) with
/// column-major vec.
Eigen::MatrixXd operator_matrix(const StochasticSystem& sys);

/// L(Q) = Ã₀ᵀQ + QÃ₀ + Σᵢ σ̂ᵢ² ÃᵢᵀQÃᵢ applied directly.
Eigen::MatrixXd apply_operator(const StochasticSystem& sys, const Eigen::MatrixXd& q);

/// Mean-square stability from the spectrum of operator_matrix().
StabilityVerdict ms_stability(const StochasticSystem& sys, const LyapunovTolerances& tol = {});

/// Solves L(Q) = -rhs through the vectorized system. Throws StabilityError
/// when the system is not mean-square stable.
GramianSolution solve_generalized_lyapunov(const StochasticSystem& sys,
                                           const Eigen::MatrixXd& rhs,
                                           const LyapunovTolerances& tol = {});

}  // namespace stochswing
