#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stochswing {

/// Raised for structurally invalid networks (bad parameters, bad indices,
/// duplicate or zero-impedance lines, disconnected topology).
class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Equivalent generator at a bus of a Kron-reduced network.
struct Bus {
  double inertia_mean = 1.0;  // M̄, per-unit s²
  double inertia_std = 0.0;   // σ, same units as the mean
  double damping = 1.0;       // β
  bool noise_active = true;   // false removes the inertia disturbance here
  double shunt_conductance = 0.0;  // parsed, never used by the linear model
};

struct Line {
  std::size_t from = 0;
  std::size_t to = 0;
  double r = 0.0;
  double x = 0.0;
};

struct Admittance {
  double g = 0.0;  // conductance
  double b = 0.0;  // susceptance
};

struct GridSpec {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::size_t ground_bus = 0;

  std::size_t bus_count() const { return buses.size(); }
};

struct Laplacians {
  Eigen::MatrixXd conductance;  // L_G
  Eigen::MatrixXd susceptance;  // L_B
};

/// Susceptance/conductance Laplacians with the ground bus row and column
/// removed. `reduced_index[i]` maps an original bus index to its row in the
/// reduced matrices, or `npos` for the grounded bus.
struct GroundedLaplacians {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  Eigen::MatrixXd conductance;  // L̃_G
  Eigen::MatrixXd susceptance;  // L̃_B
  std::size_t ground_bus = 0;
  std::vector<std::size_t> reduced_index;

  Eigen::Index size() const { return susceptance.rows(); }
};

/// y = 1/(r + jx) = (r - jx)/(r² + x²) split as g - jb, so inductive lines
/// have b > 0.
Admittance line_admittance(const Line& line);

/// Checks parameter ranges, endpoints, duplicate lines and the ground index.
/// Connectivity is checked separately by check_connectivity().
void validate(const GridSpec& grid);

/// Connected components of the line graph, each sorted ascending; the
/// components themselves are ordered by their smallest bus.
std::vector<std::vector<std::size_t>> connected_components(const GridSpec& grid);

/// Throws GridError listing every component if the grid is not connected.
void check_connectivity(const GridSpec& grid);

/// Full (N+1)×(N+1) weighted Laplacians. Shunts are ignored.
Laplacians build_laplacians(const GridSpec& grid);

/// Principal submatrix with row and column k removed.
Eigen::MatrixXd ground(const Eigen::MatrixXd& laplacian, std::size_t k);

/// validate + check_connectivity + build_laplacians + ground at grid.ground_bus.
GroundedLaplacians grounded_laplacians(const GridSpec& grid);

}  // namespace stochswing
