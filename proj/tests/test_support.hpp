#pragma once

// Fixtures and independent oracles shared by the test binaries. Nothing here
// calls into the code paths it is used to check.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stochswing/grid.hpp"
#include "stochswing/system.hpp"

namespace stochswing::testing {

inline Bus make_bus(double m_bar, double sigma, double beta, bool noise = true) {
  Bus b;
  b.inertia_mean = m_bar;
  b.inertia_std = sigma;
  b.damping = beta;
  b.noise_active = noise;
  return b;
}

/// Four-area ring used across the suites; buses 0..3 are areas 1..4.
inline GridSpec ring_grid(double m_bar = 3.0, double sigma = 0.0, double beta = 1.0) {
  GridSpec g;
  for (int i = 0; i < 4; ++i) g.buses.push_back(make_bus(m_bar, sigma, beta));
  g.lines = {{0, 1, 0.4, 0.386}, {1, 2, 0.5, 0.294}, {2, 3, 0.6, 0.596}, {3, 0, 0.28, 0.474}};
  return g;
}

/// Reference bus 0 plus one generator through a line with g = b = 1.
inline GridSpec one_bus_grid(double m_bar = 1.0, double sigma = 0.0, double beta = 1.0) {
  GridSpec g;
  g.buses = {make_bus(1.0, 0.0, 1.0, false), make_bus(m_bar, sigma, beta)};
  g.lines = {{0, 1, 0.5, 0.5}};
  return g;
}

/// Inertia std that produces the requested σ̂² under the delta method.
inline double sigma_for(double m_bar, double sigma_hat_sq) {
  return std::sqrt(sigma_hat_sq) * m_bar * m_bar;
}

/// Connected random grid with `buses` buses: a random spanning tree plus
/// a few extra lines, impedances uniform in [0.1, 1].
inline GridSpec random_grid(std::mt19937_64& rng, std::size_t buses, double m_bar, double sigma,
                            double beta) {
  std::uniform_real_distribution<double> imp(0.1, 1.0);
  GridSpec g;
  for (std::size_t i = 0; i < buses; ++i) g.buses.push_back(make_bus(m_bar, sigma, beta));
  std::set<std::pair<std::size_t, std::size_t>> used;
  for (std::size_t i = 1; i < buses; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
    g.lines.push_back({j, i, imp(rng), imp(rng)});
    used.insert({j, i});
  }
  const std::size_t extra = std::uniform_int_distribution<std::size_t>(0, buses)(rng);
  for (std::size_t e = 0; e < extra; ++e) {
    std::size_t a = std::uniform_int_distribution<std::size_t>(0, buses - 1)(rng);
    std::size_t b = std::uniform_int_distribution<std::size_t>(0, buses - 1)(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (!used.insert({a, b}).second) continue;
    g.lines.push_back({a, b, imp(rng), imp(rng)});
  }
  return g;
}

/// g and b from the complex reciprocal of r + jx (y = g - jb).
inline std::pair<double, double> admittance_oracle(double r, double x) {
  const std::complex<double> y = 1.0 / std::complex<double>(r, x);
  return {y.real(), -y.imag()};
}

/// Generalized Lyapunov operator applied entrywise with explicit loops.
inline Eigen::MatrixXd apply_operator_oracle(const StochasticSystem& sys, const Eigen::MatrixXd& q) {
  const Eigen::Index n = q.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double v = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) {
        v += sys.a0(k, i) * q(k, j) + q(i, k) * sys.a0(k, j);
      }
      for (const NoiseTerm& t : sys.noise_terms) {
        double w = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          for (Eigen::Index l = 0; l < n; ++l) w += t.a(k, i) * q(k, l) * t.a(l, j);
        }
        v += t.variance * w;
      }
      out(i, j) = v;
    }
  }
  return out;
}

/// Matrix of the operator built column by column from its action on the
/// unit matrices E_kl (column-major vec).
inline Eigen::MatrixXd operator_matrix_oracle(const StochasticSystem& sys) {
  const Eigen::Index n = sys.a0.rows();
  Eigen::MatrixXd k(n * n, n * n);
  for (Eigen::Index col = 0; col < n; ++col) {
    for (Eigen::Index row = 0; row < n; ++row) {
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
      e(row, col) = 1.0;
      const Eigen::MatrixXd image = apply_operator_oracle(sys, e);
      k.col(col * n + row) = Eigen::Map<const Eigen::VectorXd>(image.data(), n * n);
    }
  }
  return k;
}

/// Gramian from the oracle operator matrix and a full-pivot LU solve.
inline Eigen::MatrixXd gramian_oracle(const StochasticSystem& sys, const Eigen::MatrixXd& rhs) {
  const Eigen::Index n = rhs.rows();
  const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(rhs.data(), n * n);
  const Eigen::VectorXd q = operator_matrix_oracle(sys).fullPivLu().solve(-v);
  return Eigen::Map<const Eigen::MatrixXd>(q.data(), n, n);
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

}  // namespace stochswing::testing
