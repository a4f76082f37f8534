#include <gtest/gtest.h>

#include <sstream>

#include "stochswing/lyapunov.hpp"
#include "stochswing/monte_carlo.hpp"
#include "test_support.hpp"

using namespace stochswing;
using namespace stochswing::testing;

namespace {

struct Case {
  GroundedLaplacians lap;
  StochasticSystem sys;
};

Case one_bus(double sigma_hat_sq, double eta = 1.0) {
  const GridSpec g = one_bus_grid(1.0, sigma_for(1.0, sigma_hat_sq), 1.0);
  Case c;
  c.lap = grounded_laplacians(g);
  c.sys = assemble(g, c.lap, eta);
  return c;
}

SimConfig small_config(std::size_t trajectories, double horizon, double step) {
  SimConfig cfg;
  cfg.trajectories = trajectories;
  cfg.horizon = horizon;
  cfg.step = step;
  cfg.threads = 1;
  return cfg;
}

}  // namespace

TEST(EmStep, FrozenDynamics) {
  StochasticSystem sys;
  sys.dim_n = 1;
  sys.a0 = Eigen::Matrix2d::Zero();
  sys.b = Eigen::MatrixXd::Zero(2, 1);
  sys.noise_terms.push_back({Eigen::Matrix2d::Identity(), 0.3});
  const Eigen::Vector2d x(0.4, -1.2);
  const std::vector<double> z(2, 0.0);
  EXPECT_EQ(em_step(sys, x, 0.01, z), Eigen::VectorXd(x));
}

TEST(EmStep, AdditiveDrawOnly) {
  const Case c = one_bus(0.0);
  const std::vector<double> z{1.0, 0.0};
  const Eigen::VectorXd next = em_step(c.sys, Eigen::Vector2d::Zero(), 0.01, z);
  EXPECT_DOUBLE_EQ(next(0), 0.0);
  EXPECT_DOUBLE_EQ(next(1), 0.1);
}

TEST(EmStep, DeterministicPartIsEulerStep) {
  const GridSpec g = ring_grid(3.0, 0.9, 1.0);
  const StochasticSystem sys = assemble(g, grounded_laplacians(g), 1.0, NoiseCoupling::Independent);
  Eigen::VectorXd x(6);
  x << 0.1, -0.2, 0.3, 0.5, -0.1, 0.05;
  const std::vector<double> z(3 + sys.noise_terms.size(), 0.0);
  const Eigen::VectorXd expected = x + 1e-3 * sys.a0 * x;
  EXPECT_TRUE(em_step(sys, x, 1e-3, z).isApprox(expected, 1e-15));
}

TEST(EmStep, MultiplicativeDrawScalesBySigma) {
  const Case c = one_bus(0.25);
  const Eigen::Vector2d x(1.0, 0.0);
  const std::vector<double> z{0.0, 2.0};
  // √h σ̂ ξ Ã₁x with Ã₁x = (0, -1): 0.1 · 0.5 · 2 · (-1) = -0.1.
  const Eigen::VectorXd next = em_step(c.sys, x, 0.01, z);
  const Eigen::VectorXd euler = x + 0.01 * c.sys.a0 * x;
  EXPECT_NEAR(next(0), euler(0), 1e-15);
  EXPECT_NEAR(next(1), euler(1) - 0.1, 1e-15);
}

TEST(EmStep, RejectsBadArguments) {
  const Case c = one_bus(0.5);
  const std::vector<double> z{0.0, 0.0};
  EXPECT_THROW(em_step(c.sys, Eigen::Vector2d::Zero(), 0.0, z), std::invalid_argument);
  EXPECT_THROW(em_step(c.sys, Eigen::Vector3d::Zero(), 0.1, z), std::invalid_argument);
  EXPECT_THROW(em_step(c.sys, Eigen::Vector2d::Zero(), 0.1, std::vector<double>{0.0}),
               std::invalid_argument);
}

TEST(SimConfigValidation, RejectsInvalid) {
  const Case c = one_bus(0.5);
  SimConfig cfg = small_config(10, 10.0, 0.01);
  EXPECT_NO_THROW(validate(cfg, c.sys));
  cfg.step = 0.0;
  EXPECT_THROW(validate(cfg, c.sys), std::invalid_argument);
  cfg = small_config(10, 10.0, 0.01);
  cfg.burn_in = 10.0;
  EXPECT_THROW(validate(cfg, c.sys), std::invalid_argument);
  cfg.burn_in = -1.0;
  EXPECT_THROW(validate(cfg, c.sys), std::invalid_argument);
  cfg = small_config(0, 10.0, 0.01);
  EXPECT_THROW(validate(cfg, c.sys), std::invalid_argument);
  cfg = small_config(10, 10.0, 0.01);
  cfg.initial_state = Eigen::Vector3d::Zero();
  EXPECT_THROW(validate(cfg, c.sys), std::invalid_argument);
}

TEST(EstimateOutputEnergy, NoExcitationGivesZero) {
  const Case c = one_bus(0.5, 0.0);
  const EnergyEstimate e =
      estimate_output_energy(c.sys, output_gram(OutputKind::Frequency, c.lap), small_config(20, 5.0, 0.01));
  EXPECT_EQ(e.mean, 0.0);
  EXPECT_EQ(e.std_error, 0.0);
  EXPECT_EQ(e.diverged, 0u);
  EXPECT_FALSE(e.likely_unstable);
}

TEST(EstimateOutputEnergy, BitIdenticalAcrossRunsAndThreadCounts) {
  const GridSpec g = ring_grid(1.0, sigma_for(1.0, 0.2), 1.0);
  const GroundedLaplacians lap = grounded_laplacians(g);
  const StochasticSystem sys = assemble(g, lap, 1.0, NoiseCoupling::Independent);
  const OutputSpec out = output_gram(OutputKind::PhaseAndFrequency, lap, 10.0);
  SimConfig cfg = small_config(24, 4.0, 0.01);
  cfg.seed = 42;
  const EnergyEstimate a = estimate_output_energy(sys, out, cfg);
  const EnergyEstimate b = estimate_output_energy(sys, out, cfg);
  cfg.threads = 3;
  const EnergyEstimate c = estimate_output_energy(sys, out, cfg);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.mean, c.mean);
  EXPECT_EQ(a.std_error, c.std_error);
  EXPECT_EQ(a.tail_index, c.tail_index);

  cfg.seed = 43;
  EXPECT_NE(estimate_output_energy(sys, out, cfg).mean, a.mean);
}

TEST(EstimateOutputEnergy, ZeroNoiseDecaysToRest) {
  const GridSpec g = ring_grid(3.0, 0.0, 1.0);
  const StochasticSystem sys = assemble(g, grounded_laplacians(g), 0.0);
  SimConfig cfg = small_config(1, 120.0, 1e-3);
  Eigen::VectorXd x0(6);
  x0 << 0.3, -0.2, 0.1, 1.0, 0.0, -0.5;
  cfg.initial_state = x0;
  const auto x = simulate_final_state(sys, cfg, 0);
  ASSERT_TRUE(x);
  EXPECT_LT(x->norm(), 1e-3 * x0.norm());
}

TEST(EstimateOutputEnergy, AdditiveOnlyMatchesStandardLyapunov) {
  const GridSpec g = ring_grid(1.0, 0.0, 1.0);
  const GroundedLaplacians lap = grounded_laplacians(g);
  const StochasticSystem sys = assemble(g, lap, 1.0);
  const OutputSpec out = output_gram(OutputKind::PhaseCohesiveness, lap);
  const Eigen::MatrixXd q = solve_lyapunov(sys.a0, out.gram).q;
  const double expected = (sys.b.transpose() * q * sys.b).trace();

  SimConfig cfg = small_config(400, 60.0, 2e-3);
  cfg.burn_in = 20.0;
  const EnergyEstimate e = estimate_output_energy(sys, out, cfg);
  EXPECT_LE(std::abs(e.mean - expected), 3 * e.std_error)
      << "mean " << e.mean << " se " << e.std_error << " expected " << expected;
  EXPECT_FALSE(e.likely_unstable);
}

TEST(EstimateOutputEnergy, OneBusMultiplicativeWithinThreeStandardErrors) {
  const Case c = one_bus(0.5);
  SimConfig cfg = small_config(2000, 100.0, 2e-3);
  cfg.seed = 5;
  const EnergyEstimate e =
      estimate_output_energy(c.sys, output_gram(OutputKind::Frequency, c.lap), cfg);
  EXPECT_LE(std::abs(e.mean - 1.0), 3 * e.std_error)
      << "mean " << e.mean << " se " << e.std_error;
  EXPECT_EQ(e.diverged, 0u);
  EXPECT_FALSE(e.likely_unstable);
  EXPECT_GT(e.tail_index, 1.0);
}

TEST(EstimateOutputEnergy, SupercriticalIsFlagged) {
  const Case c = one_bus(1.5);
  SimConfig cfg = small_config(200, 100.0, 2e-3);
  const EnergyEstimate e =
      estimate_output_energy(c.sys, output_gram(OutputKind::Frequency, c.lap), cfg);
  EXPECT_TRUE(e.likely_unstable) << "tail index " << e.tail_index << " diverged " << e.diverged;
}

TEST(EstimateOutputEnergy, HalvingStepIsStatisticallyConsistent) {
  const Case c = one_bus(0.2);
  const OutputSpec out = output_gram(OutputKind::Frequency, c.lap);
  SimConfig cfg = small_config(600, 60.0, 4e-3);
  cfg.burn_in = 20.0;
  const EnergyEstimate coarse = estimate_output_energy(c.sys, out, cfg);
  cfg.step = 2e-3;
  cfg.seed = 2;
  const EnergyEstimate fine = estimate_output_energy(c.sys, out, cfg);
  const double joint = std::hypot(coarse.std_error, fine.std_error);
  EXPECT_LE(std::abs(coarse.mean - fine.mean), 3 * joint)
      << coarse.mean << " vs " << fine.mean << " joint se " << joint;
}

TEST(TrajectoryDump, MatchesFinalState) {
  const Case c = one_bus(0.5);
  SimConfig cfg = small_config(1, 1.0, 0.01);
  cfg.seed = 9;
  std::ostringstream os;
  write_trajectory_csv(os, c.sys, cfg, 3, 10);
  std::istringstream in(os.str());
  std::string line, last;
  std::getline(in, line);
  EXPECT_EQ(line, "t,x0,x1");
  int rows = 0;
  while (std::getline(in, line)) {
    last = line;
    ++rows;
  }
  EXPECT_EQ(rows, 11);  // t = 0, 0.1, ..., 1

  const auto x = simulate_final_state(c.sys, cfg, 3);
  ASSERT_TRUE(x);
  std::ostringstream expected;
  expected.precision(17);
  expected << 1 << ',' << (*x)(0) << ',' << (*x)(1);
  EXPECT_EQ(last, expected.str());
  EXPECT_THROW(write_trajectory_csv(os, c.sys, cfg, 0, 0), std::invalid_argument);
}
