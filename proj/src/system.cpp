#include "stochswing/system.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <stdexcept>

namespace stochswing {

InverseInertiaParams delta_method(double inertia_mean, double inertia_std) {
  if (!(inertia_mean > 0.0) || !std::isfinite(inertia_mean)) {
    throw std::invalid_argument("delta_method: inertia mean must be positive");
  }
  if (!(inertia_std >= 0.0) || !std::isfinite(inertia_std)) {
    throw std::invalid_argument("delta_method: inertia std must be nonnegative");
  }
  const double m2 = inertia_mean * inertia_mean;
  return {1.0 / inertia_mean, (inertia_std * inertia_std) / (m2 * m2)};
}

namespace {

// [[0, 0], [-S L̃_B, -S D̃]] for a diagonal allocation S.
Eigen::MatrixXd noise_matrix(const Eigen::VectorXd& allocation, const Eigen::MatrixXd& lb,
                             const Eigen::VectorXd& damping) {
  const Eigen::Index n = lb.rows();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  a.bottomLeftCorner(n, n) = -(allocation.asDiagonal() * lb);
  a.bottomRightCorner(n, n) = -(allocation.cwiseProduct(damping)).asDiagonal().toDenseMatrix();
  return a;
}

}  // namespace

StochasticSystem assemble(const GridSpec& grid, const GroundedLaplacians& lap,
                          std::span<const InverseInertiaParams> params, double eta,
                          NoiseCoupling coupling) {
  if (params.size() != grid.bus_count()) {
    throw std::invalid_argument("assemble: " + std::to_string(params.size()) +
                                " parameter sets for " + std::to_string(grid.bus_count()) +
                                " buses");
  }
  if (lap.ground_bus != grid.ground_bus ||
      static_cast<std::size_t>(lap.size()) + 1 != grid.bus_count() ||
      lap.reduced_index.size() != grid.bus_count()) {
    throw std::invalid_argument("assemble: Laplacians were not grounded from this grid");
  }
  if (!(eta >= 0.0)) throw std::invalid_argument("assemble: eta must be nonnegative");

  const Eigen::Index n = lap.size();
  StochasticSystem sys;
  sys.dim_n = n;
  sys.eta = eta;
  sys.coupling = coupling;
  sys.inverse_inertia.resize(n);
  sys.damping.resize(n);
  sys.sigma_hat_sq.resize(n);
  Eigen::VectorXd active = Eigen::VectorXd::Zero(n);

  for (std::size_t bus = 0; bus < grid.bus_count(); ++bus) {
    const std::size_t r = lap.reduced_index[bus];
    if (r == GroundedLaplacians::npos) continue;
    const auto i = static_cast<Eigen::Index>(r);
    const InverseInertiaParams& p = params[bus];
    if (!(p.m_hat_inv > 0.0) || !(p.sigma_hat_sq >= 0.0)) {
      throw std::invalid_argument("assemble: bus " + std::to_string(bus) +
                                  " needs m_hat_inv > 0 and sigma_hat_sq >= 0");
    }
    sys.inverse_inertia(i) = p.m_hat_inv;
    sys.damping(i) = grid.buses[bus].damping;
    const bool on = grid.buses[bus].noise_active;
    sys.sigma_hat_sq(i) = on ? p.sigma_hat_sq : 0.0;
    active(i) = on ? 1.0 : 0.0;
  }

  const Eigen::MatrixXd& lb = lap.susceptance;
  sys.a0 = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  sys.a0.topRightCorner(n, n).setIdentity();
  sys.a0.bottomLeftCorner(n, n) = -(sys.inverse_inertia.asDiagonal() * lb);
  sys.a0.bottomRightCorner(n, n) =
      -(sys.inverse_inertia.cwiseProduct(sys.damping)).asDiagonal().toDenseMatrix();

  sys.b = Eigen::MatrixXd::Zero(2 * n, n);
  sys.b.bottomRows(n) = (eta * sys.inverse_inertia).asDiagonal();

  if (coupling == NoiseCoupling::Independent) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (active(i) == 0.0) continue;
      sys.noise_terms.push_back(
          {noise_matrix(Eigen::VectorXd::Unit(n, i), lb, sys.damping), sys.sigma_hat_sq(i)});
    }
  } else if (active.any()) {
    // One shared disturbance; bus i moves by σ̂ᵢ times it. Normalising by the
    // largest σ̂ keeps the allocation a 0/1 indicator in the homogeneous case.
    const double ref_sq = sys.sigma_hat_sq.maxCoeff();
    Eigen::VectorXd allocation = active;
    if (ref_sq > 0.0) allocation = sys.sigma_hat_sq.cwiseSqrt() / std::sqrt(ref_sq);
    sys.noise_terms.push_back({noise_matrix(allocation, lb, sys.damping), ref_sq});
  }
  return sys;
}

StochasticSystem assemble(const GridSpec& grid, const GroundedLaplacians& lap, double eta,
                          NoiseCoupling coupling) {
  std::vector<InverseInertiaParams> params;
  params.reserve(grid.bus_count());
  for (const Bus& bus : grid.buses) {
    params.push_back(delta_method(bus.inertia_mean, bus.inertia_std));
  }
  return assemble(grid, lap, params, eta, coupling);
}

StochasticSystem without_multiplicative_noise(const StochasticSystem& sys) {
  return scale_noise(sys, 0.0);
}

StochasticSystem scale_noise(const StochasticSystem& sys, double factor) {
  if (!(factor >= 0.0)) throw std::invalid_argument("scale_noise: factor must be nonnegative");
  StochasticSystem out = sys;
  out.sigma_hat_sq *= factor;
  for (NoiseTerm& term : out.noise_terms) term.variance *= factor;
  return out;
}

GridSpec homogenized(const GridSpec& grid, double inertia_mean, double inertia_std,
                     double damping) {
  GridSpec out = grid;
  for (Bus& bus : out.buses) {
    bus.inertia_mean = inertia_mean;
    bus.inertia_std = inertia_std;
    bus.damping = damping;
  }
  return out;
}

OutputSpec output_gram(OutputKind kind, const GroundedLaplacians& lap, double kappa) {
  const Eigen::Index n = lap.size();
  OutputSpec out;
  out.kind = kind;
  out.kappa = kappa;
  switch (kind) {
    case OutputKind::PhaseCohesiveness:
      out.j = lap.conductance;
      out.k = Eigen::MatrixXd::Zero(n, n);
      break;
    case OutputKind::Frequency:
      out.j = Eigen::MatrixXd::Zero(n, n);
      out.k = Eigen::MatrixXd::Identity(n, n);
      break;
    case OutputKind::PhaseAndFrequency:
      if (!(kappa > 0.0)) throw std::invalid_argument("output_gram: kappa must be positive");
      out.j = lap.conductance;
      out.k = kappa * kappa * Eigen::MatrixXd::Identity(n, n);
      break;
    case OutputKind::General:
      throw std::invalid_argument("output_gram: use general_output() for J/K weights");
  }
  out.gram = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  out.gram.topLeftCorner(n, n) = out.j;
  out.gram.bottomRightCorner(n, n) = out.k;
  return out;
}

OutputSpec general_output(const Eigen::MatrixXd& j, const Eigen::MatrixXd& k) {
  const Eigen::Index n = j.rows();
  if (j.cols() != n || k.rows() != n || k.cols() != n) {
    throw std::invalid_argument("general_output: J and K must be square and equally sized");
  }
  for (const Eigen::MatrixXd* m : {&j, &k}) {
    if (!m->isApprox(m->transpose(), 1e-12) ||
        Eigen::LLT<Eigen::MatrixXd>(*m).info() != Eigen::Success) {
      throw std::invalid_argument("general_output: J and K must be symmetric positive definite");
    }
  }
  OutputSpec out;
  out.kind = OutputKind::General;
  out.j = j;
  out.k = k;
  out.gram = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  out.gram.topLeftCorner(n, n) = j;
  out.gram.bottomRightCorner(n, n) = k;
  return out;
}

std::string_view to_string(OutputKind kind) {
  switch (kind) {
    case OutputKind::PhaseCohesiveness: return "phase";
    case OutputKind::Frequency: return "freq";
    case OutputKind::PhaseAndFrequency: return "both";
    case OutputKind::General: return "general";
  }
  return "?";
}

std::optional<OutputKind> parse_output_kind(std::string_view name) {
  if (name == "phase") return OutputKind::PhaseCohesiveness;
  if (name == "freq") return OutputKind::Frequency;
  if (name == "both") return OutputKind::PhaseAndFrequency;
  return std::nullopt;
}

std::string_view to_string(NoiseCoupling coupling) {
  return coupling == NoiseCoupling::Common ? "common" : "independent";
}

void write_matrix(std::ostream& os, std::string_view name, const Eigen::MatrixXd& m) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
    os << '\n';
  }
  os.flags(flags);
  os.precision(precision);
}

void write_system(std::ostream& os, const StochasticSystem& sys) {
  write_matrix(os, "A0", sys.a0);
  for (std::size_t i = 0; i < sys.noise_terms.size(); ++i) {
    const auto precision = os.precision();
    os << "# noise term " << i << " variance " << std::setprecision(17)
       << sys.noise_terms[i].variance << '\n';
    os.precision(precision);
    write_matrix(os, "A" + std::to_string(i + 1), sys.noise_terms[i].a);
  }
  write_matrix(os, "B", sys.b);
}

}  // namespace stochswing
