#include <gtest/gtest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "stochswing/grid.hpp"
#include "test_support.hpp"

using namespace stochswing;
using namespace stochswing::testing;

namespace {

double min_eig(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

}  // namespace

// Frozen from the complex-reciprocal oracle: (0.4, 0.386) and (0.28, 0.474).
TEST(LineAdmittance, RingLinesMatchComplexReciprocal) {
  for (const auto& [r, x, g_ref, b_ref] :
       {std::tuple{0.4, 0.386, 1.2945151393545546, 1.249207109477145},
        std::tuple{0.28, 0.474, 0.9238606818091832, 1.5639641542055456}}) {
    const Admittance y = line_admittance({0, 1, r, x});
    const auto [g, b] = admittance_oracle(r, x);
    EXPECT_NEAR(y.g, g, 1e-14);
    EXPECT_NEAR(y.b, b, 1e-14);
    EXPECT_NEAR(y.g, g_ref, 1e-14);
    EXPECT_NEAR(y.b, b_ref, 1e-14);
  }
}

TEST(LineAdmittance, SymmetricImpedance) {
  const Admittance y = line_admittance({0, 1, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(y.g, 0.5);
  EXPECT_DOUBLE_EQ(y.b, 0.5);
}

TEST(LineAdmittance, RejectsNonPositiveImpedance) {
  EXPECT_THROW(line_admittance({0, 1, 1.0, 0.0}), GridError);
  EXPECT_THROW(line_admittance({0, 1, 0.0, 1.0}), GridError);
  EXPECT_THROW(line_admittance({0, 1, 0.0, 0.0}), GridError);
  EXPECT_THROW(line_admittance({0, 1, -0.1, 1.0}), GridError);
}

TEST(BuildLaplacians, SingleEdge) {
  GridSpec g;
  g.buses = {make_bus(1, 0, 1), make_bus(1, 0, 1)};
  g.lines = {{0, 1, 0.5, 0.5}};  // b = 1
  const Laplacians lap = build_laplacians(g);
  Eigen::Matrix2d expected;
  expected << 1, -1, -1, 1;
  EXPECT_TRUE(lap.susceptance.isApprox(expected, 1e-15));
}

TEST(BuildLaplacians, RingRowSumsAndZeroEigenvalue) {
  const Laplacians lap = build_laplacians(ring_grid());
  for (const Eigen::MatrixXd* m : {&lap.susceptance, &lap.conductance}) {
    EXPECT_LT(m->rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(min_eig(*m), 0.0, 1e-12);
  }
  const auto [g12, b12] = admittance_oracle(0.4, 0.386);
  EXPECT_NEAR(lap.susceptance(0, 1), -b12, 1e-14);
  EXPECT_NEAR(lap.conductance(0, 1), -g12, 1e-14);
  EXPECT_NEAR(lap.susceptance(0, 1), -1.2492, 5e-5);
}

TEST(BuildLaplacians, ShuntsIgnored) {
  GridSpec g = ring_grid();
  const Laplacians before = build_laplacians(g);
  g.buses[2].shunt_conductance = 0.7;
  const Laplacians after = build_laplacians(g);
  EXPECT_EQ(before.conductance, after.conductance);
  EXPECT_EQ(before.susceptance, after.susceptance);
}

TEST(Ground, ScalarAndRing) {
  Eigen::Matrix2d l;
  l << 1, -1, -1, 1;
  const Eigen::MatrixXd reduced = ground(l, 0);
  ASSERT_EQ(reduced.rows(), 1);
  EXPECT_DOUBLE_EQ(reduced(0, 0), 1.0);

  const Laplacians lap = build_laplacians(ring_grid());
  const Eigen::MatrixXd lb = ground(lap.susceptance, 0);
  ASSERT_EQ(lb.rows(), 3);
  ASSERT_EQ(lb.cols(), 3);
  EXPECT_GT(min_eig(lb), 0.0);
  EXPECT_EQ(lb, lb.transpose());
  EXPECT_EQ(lb, lap.susceptance.bottomRightCorner(3, 3));
}

TEST(Ground, MiddleIndexRemovesRowAndColumn) {
  Eigen::Matrix3d m;
  m << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  Eigen::Matrix2d expected;
  expected << 1, 3, 7, 9;
  EXPECT_EQ(ground(m, 1), Eigen::MatrixXd(expected));
}

TEST(Ground, OutOfRange) {
  EXPECT_THROW(ground(Eigen::MatrixXd::Identity(3, 3), 3), GridError);
}

TEST(Connectivity, RingIsConnected) {
  EXPECT_NO_THROW(check_connectivity(ring_grid()));
}

TEST(Connectivity, NoLines) {
  GridSpec g;
  g.buses = {make_bus(1, 0, 1), make_bus(1, 0, 1)};
  EXPECT_THROW(check_connectivity(g), GridError);
}

TEST(Connectivity, TwoComponentsReported) {
  GridSpec g;
  for (int i = 0; i < 4; ++i) g.buses.push_back(make_bus(1, 0, 1));
  g.lines = {{0, 1, 0.1, 0.2}, {2, 3, 0.1, 0.2}};
  const auto components = connected_components(g);
  ASSERT_EQ(components.size(), 2u);
  EXPECT_EQ(components[0], (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(components[1], (std::vector<std::size_t>{2, 3}));
  try {
    check_connectivity(g);
    FAIL() << "expected GridError";
  } catch (const GridError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("2 components"), std::string::npos) << what;
    EXPECT_NE(what.find("{0, 1}"), std::string::npos) << what;
    EXPECT_NE(what.find("{2, 3}"), std::string::npos) << what;
  }
}

TEST(Validate, RejectsBadInput) {
  GridSpec g = ring_grid();
  g.lines.push_back({1, 0, 0.3, 0.3});
  EXPECT_THROW(validate(g), GridError) << "duplicate line in reverse orientation";

  g = ring_grid();
  g.lines.push_back({2, 2, 0.3, 0.3});
  EXPECT_THROW(validate(g), GridError);

  g = ring_grid();
  g.lines.push_back({1, 7, 0.3, 0.3});
  EXPECT_THROW(validate(g), GridError);

  g = ring_grid();
  g.ground_bus = 4;
  EXPECT_THROW(validate(g), GridError);

  g = ring_grid();
  g.buses[1].inertia_mean = 0.0;
  EXPECT_THROW(validate(g), GridError);

  g = ring_grid();
  g.buses[1].damping = -1.0;
  EXPECT_THROW(validate(g), GridError);

  g = ring_grid();
  g.buses[1].inertia_std = -0.1;
  EXPECT_THROW(validate(g), GridError);

  g = ring_grid();
  g.buses.resize(1);
  g.lines.clear();
  EXPECT_THROW(validate(g), GridError);
}

TEST(GroundedLaplacians, IndexMap) {
  GridSpec g = ring_grid();
  g.ground_bus = 2;
  const GroundedLaplacians lap = grounded_laplacians(g);
  EXPECT_EQ(lap.reduced_index,
            (std::vector<std::size_t>{0, 1, GroundedLaplacians::npos, 2}));
  EXPECT_EQ(lap.size(), 3);
}

TEST(GroundedLaplacians, RandomGridProperties) {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + trial % 8;
    GridSpec g = random_grid(rng, n, 1.0, 0.0, 1.0);
    const Laplacians full = build_laplacians(g);
    EXPECT_LT(full.susceptance.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(full.conductance.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);

    // Every choice of ground bus gives positive definite, symmetric matrices.
    for (std::size_t k = 0; k < n; ++k) {
      g.ground_bus = k;
      const GroundedLaplacians lap = grounded_laplacians(g);
      for (const Eigen::MatrixXd* m : {&lap.susceptance, &lap.conductance}) {
        EXPECT_LE((*m - m->transpose()).norm(), 1e-12 * m->norm());
        EXPECT_GT(min_eig(*m), 0.0);
      }
    }
  }
}
