#include "stochswing/h2.hpp"

#include <algorithm>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace stochswing {

namespace {

bool uniform(const Eigen::VectorXd& v, double rel_tol) {
  if (v.size() == 0) return true;
  const double lo = v.minCoeff();
  const double hi = v.maxCoeff();
  return hi - lo <= rel_tol * std::max(std::abs(hi), std::abs(lo));
}

constexpr double kPositiveDefiniteTol = 1e-10;

}  // namespace

std::string_view to_string(H2Method method) {
  switch (method) {
    case H2Method::ClosedForm: return "closed-form";
    case H2Method::Vectorized: return "vectorized";
    case H2Method::MonteCarlo: return "monte-carlo";
  }
  return "?";
}

std::optional<HomogeneousParams> homogeneous_params(const StochasticSystem& sys,
                                                    double rel_tol) {
  if (sys.dim_n == 0) return std::nullopt;
  if (!uniform(sys.inverse_inertia, rel_tol) || !uniform(sys.damping, rel_tol) ||
      !uniform(sys.sigma_hat_sq, rel_tol)) {
    return std::nullopt;
  }
  return HomogeneousParams{1.0 / sys.inverse_inertia(0), sys.damping(0), sys.sigma_hat_sq(0),
                           sys.eta};
}

bool closed_form_applies(const StochasticSystem& sys) {
  const auto p = homogeneous_params(sys);
  if (!p) return false;
  return sys.coupling == NoiseCoupling::Common || p->sigma_hat_sq == 0.0 || sys.dim_n == 1;
}

Eigen::MatrixXd p_matrix(const HomogeneousParams& p, const Eigen::MatrixXd& susceptance) {
  const Eigen::Index n = susceptance.rows();
  const double a = 2.0 * p.beta / p.m_hat - p.sigma_hat_sq * p.beta * p.beta;
  return a * Eigen::MatrixXd::Identity(n, n) - p.sigma_hat_sq * p.m_hat * susceptance;
}

H2Report h2_squared_vectorized(const StochasticSystem& sys, const OutputSpec& out,
                               const LyapunovTolerances& tol) {
  H2Report report;
  report.method = H2Method::Vectorized;
  report.output = out.kind;
  report.stability = ms_stability(sys, tol);
  if (!report.stability->ms_stable) {
    report.h2_squared = kUnbounded;
    return report;
  }
  try {
    GramianSolution sol = solve_generalized_lyapunov(sys, out.gram, tol);
    report.h2_squared = (sys.b.transpose() * sol.q * sys.b).trace();
    report.gramian = std::move(sol);
  } catch (const StabilityError&) {
    report.h2_squared = kUnbounded;
    report.stability->ms_stable = false;
  }
  return report;
}

H2Report h2_squared_closed_form(const HomogeneousParams& p, const GroundedLaplacians& lap,
                                const OutputSpec& out) {
  if (!(p.m_hat > 0.0) || !(p.beta > 0.0) || !(p.sigma_hat_sq >= 0.0)) {
    throw std::invalid_argument("h2_squared_closed_form: need M̂ > 0, β > 0, σ̂² >= 0");
  }
  const Eigen::MatrixXd& lb = lap.susceptance;
  H2Report report;
  report.method = H2Method::ClosedForm;
  report.output = out.kind;

  const Eigen::MatrixXd p_tilde = p_matrix(p, lb);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> p_eig(p_tilde, Eigen::EigenvaluesOnly);
  if (!(p_eig.eigenvalues().minCoeff() > kPositiveDefiniteTol)) {
    report.h2_squared = kUnbounded;
    return report;
  }

  const Eigen::LLT<Eigen::MatrixXd> lb_llt(lb);
  if (lb_llt.info() != Eigen::Success) {
    throw std::logic_error("h2_squared_closed_form: grounded susceptance Laplacian is singular");
  }
  // J L̃_B⁻¹ = (L̃_B⁻¹ J)ᵀ since both are symmetric.
  const Eigen::MatrixXd weight = p.m_hat * lb_llt.solve(out.j).transpose() + out.k;
  const double trace = Eigen::LLT<Eigen::MatrixXd>(p_tilde).solve(weight).trace();
  report.h2_squared = p.eta * p.eta * trace / (p.m_hat * p.m_hat);
  return report;
}

double sigma_sq_critical(double m_hat, double beta, const GroundedLaplacians& lap) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap.susceptance,
                                                           Eigen::EigenvaluesOnly);
  const double lambda_max = eig.eigenvalues().maxCoeff();
  return 2.0 * beta / (m_hat * (beta * beta + lambda_max * m_hat));
}

double laplacian_eig_bound(const HomogeneousParams& p) {
  if (p.sigma_hat_sq == 0.0) return kUnbounded;
  return (2.0 * p.beta - p.m_hat * p.sigma_hat_sq * p.beta * p.beta) /
         (p.sigma_hat_sq * p.m_hat * p.m_hat);
}

double normalized_h2(const StochasticSystem& sys, const OutputSpec& out) {
  const double baseline = h2_squared_vectorized(without_multiplicative_noise(sys), out).h2_squared;
  if (!(baseline > 0.0) || !std::isfinite(baseline)) {
    throw std::domain_error("normalized_h2: additive-only baseline is not finite and positive");
  }
  return h2_squared_vectorized(sys, out).h2_squared / baseline;
}

double normalized_h2(const HomogeneousParams& p, const GroundedLaplacians& lap,
                     const OutputSpec& out) {
  HomogeneousParams base = p;
  base.sigma_hat_sq = 0.0;
  const double baseline = h2_squared_closed_form(base, lap, out).h2_squared;
  if (!(baseline > 0.0) || !std::isfinite(baseline)) {
    throw std::domain_error("normalized_h2: additive-only baseline is not finite and positive");
  }
  return h2_squared_closed_form(p, lap, out).h2_squared / baseline;
}

}  // namespace stochswing
