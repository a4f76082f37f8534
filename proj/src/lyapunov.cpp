#include "stochswing/lyapunov.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace stochswing {

namespace {

double relative_residual(const Eigen::MatrixXd& lhs_plus_rhs, const Eigen::MatrixXd& rhs) {
  const double scale = rhs.norm();
  const double r = lhs_plus_rhs.norm();
  return scale > 0.0 ? r / scale : r;
}

void finish(GramianSolution& sol, const LyapunovTolerances& tol) {
  const double qn = sol.q.norm();
  sol.asymmetry = qn > 0.0 ? (sol.q - sol.q.transpose()).norm() / qn : 0.0;
  sol.q = 0.5 * (sol.q + sol.q.transpose()).eval();
  if (sol.q.size() == 0 || qn == 0.0) {
    sol.psd = true;
    return;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sol.q, Eigen::EigenvaluesOnly);
  sol.psd = eig.eigenvalues().minCoeff() >= -tol.psd_slack * sol.q.norm();
}

std::string describe_margin(double abscissa, double tie) {
  std::ostringstream os;
  os.precision(6);
  if (std::abs(abscissa) <= tie) {
    os << "on the stability boundary (abscissa " << abscissa << ")";
  } else if (abscissa < 0.0) {
    os << "second-moment decay rate " << -abscissa;
  } else {
    os << "second-moment growth rate " << abscissa;
  }
  return os.str();
}

}  // namespace

double spectral_abscissa(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return -std::numeric_limits<double>::infinity();
  const Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("spectral_abscissa: eigenvalue iteration did not converge");
  }
  return es.eigenvalues().real().maxCoeff();
}

GramianSolution solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& rhs,
                               const LyapunovTolerances& tol) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || rhs.rows() != n || rhs.cols() != n) {
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");
  }
  const double abscissa = spectral_abscissa(a);
  if (!(abscissa < -tol.abscissa_tie)) {
    std::ostringstream msg;
    msg << "solve_lyapunov: matrix is not Hurwitz (spectral abscissa " << abscissa << ")";
    throw StabilityError(msg.str(), abscissa);
  }

  using Complex = std::complex<double>;
  const Eigen::ComplexSchur<Eigen::MatrixXd> schur(a);
  const Eigen::MatrixXcd& u = schur.matrixU();
  const Eigen::MatrixXcd& t = schur.matrixT();

  // With A = U T Uᴴ the equation becomes Tᴴ Y + Y T = -F, Y = Uᴴ Q U,
  // F = Uᴴ rhs U; Tᴴ is lower and T upper triangular, so Y fills row by row.
  const Eigen::MatrixXcd f = u.adjoint() * rhs.cast<Complex>() * u;
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Complex acc = -f(i, j);
      for (Eigen::Index k = 0; k < i; ++k) acc -= std::conj(t(k, i)) * y(k, j);
      for (Eigen::Index k = 0; k < j; ++k) acc -= y(i, k) * t(k, j);
      y(i, j) = acc / (std::conj(t(i, i)) + t(j, j));
    }
  }

  GramianSolution sol;
  sol.q = (u * y * u.adjoint()).real();
  finish(sol, tol);
  sol.residual_norm =
      relative_residual(a.transpose() * sol.q + sol.q * a + rhs, rhs);
  return sol;
}

Eigen::MatrixXd operator_matrix(const StochasticSystem& sys) {
  const Eigen::Index n = sys.a0.rows();
  const Eigen::Index n2 = n * n;
  const Eigen::MatrixXd a0t = sys.a0.transpose();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n2, n2);

  // Ã₀ᵀ⊗I: block (p, q) is Ã₀ᵀ(p, q)·I. I⊗Ã₀ᵀ: block-diagonal copies of Ã₀ᵀ.
  for (Eigen::Index p = 0; p < n; ++p) {
    for (Eigen::Index q = 0; q < n; ++q) {
      if (a0t(p, q) != 0.0) {
        k.block(p * n, q * n, n, n).diagonal().array() += a0t(p, q);
      }
    }
    k.block(p * n, p * n, n, n) += a0t;
  }
  for (const NoiseTerm& term : sys.noise_terms) {
    if (term.variance == 0.0) continue;
    const Eigen::MatrixXd at = term.a.transpose();
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = 0; q < n; ++q) {
        if (at(p, q) != 0.0) k.block(p * n, q * n, n, n) += term.variance * at(p, q) * at;
      }
    }
  }
  return k;
}

Eigen::MatrixXd apply_operator(const StochasticSystem& sys, const Eigen::MatrixXd& q) {
  Eigen::MatrixXd out = sys.a0.transpose() * q + q * sys.a0;
  for (const NoiseTerm& term : sys.noise_terms) {
    out += term.variance * term.a.transpose() * q * term.a;
  }
  return out;
}

StabilityVerdict ms_stability(const StochasticSystem& sys, const LyapunovTolerances& tol) {
  StabilityVerdict v;
  v.spectral_abscissa = spectral_abscissa(operator_matrix(sys));
  v.ms_stable = v.spectral_abscissa < -tol.abscissa_tie;
  v.margin = describe_margin(v.spectral_abscissa, tol.abscissa_tie);
  return v;
}

GramianSolution solve_generalized_lyapunov(const StochasticSystem& sys,
                                           const Eigen::MatrixXd& rhs,
                                           const LyapunovTolerances& tol) {
  const Eigen::Index n = sys.a0.rows();
  if (rhs.rows() != n || rhs.cols() != n) {
    throw std::invalid_argument("solve_generalized_lyapunov: rhs is " +
                                std::to_string(rhs.rows()) + "x" + std::to_string(rhs.cols()) +
                                ", state dimension is " + std::to_string(n));
  }
  const Eigen::MatrixXd k = operator_matrix(sys);
  const double abscissa = spectral_abscissa(k);
  if (!(abscissa < -tol.abscissa_tie)) {
    std::ostringstream msg;
    msg << "system is not mean-square stable: generalized Lyapunov operator has spectral "
           "abscissa "
        << abscissa;
    throw StabilityError(msg.str(), abscissa);
  }

  const Eigen::VectorXd rhs_vec = Eigen::Map<const Eigen::VectorXd>(rhs.data(), n * n);
  const Eigen::VectorXd q_vec = k.partialPivLu().solve(-rhs_vec);

  GramianSolution sol;
  sol.q = Eigen::Map<const Eigen::MatrixXd>(q_vec.data(), n, n);
  finish(sol, tol);
  sol.residual_norm = relative_residual(apply_operator(sys, sol.q) + rhs, rhs);
  return sol;
}

}  // namespace stochswing
