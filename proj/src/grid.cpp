#include "stochswing/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

namespace stochswing {

Admittance line_admittance(const Line& line) {
  if (!(line.r > 0.0) || !(line.x > 0.0) || !std::isfinite(line.r) ||
      !std::isfinite(line.x)) {
    std::ostringstream msg;
    msg << "line (" << line.from << ", " << line.to
        << ") needs r > 0 and x > 0, got r=" << line.r << " x=" << line.x;
    throw GridError(msg.str());
  }
  const double z2 = line.r * line.r + line.x * line.x;
  return {line.r / z2, line.x / z2};
}

void validate(const GridSpec& grid) {
  const std::size_t n = grid.bus_count();
  if (n < 2) {
    throw GridError("a grid needs at least two buses, got " + std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Bus& bus = grid.buses[i];
    std::ostringstream msg;
    if (!(bus.inertia_mean > 0.0) || !std::isfinite(bus.inertia_mean)) {
      msg << "bus " << i << ": inertia_mean must be positive, got " << bus.inertia_mean;
    } else if (!(bus.inertia_std >= 0.0) || !std::isfinite(bus.inertia_std)) {
      msg << "bus " << i << ": inertia_std must be nonnegative, got " << bus.inertia_std;
    } else if (!(bus.damping > 0.0) || !std::isfinite(bus.damping)) {
      msg << "bus " << i << ": damping must be positive, got " << bus.damping;
    }
    if (!msg.str().empty()) throw GridError(msg.str());
  }
  if (grid.ground_bus >= n) {
    throw GridError("ground_bus " + std::to_string(grid.ground_bus) +
                    " is not a bus index (bus count " + std::to_string(n) + ")");
  }

  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const Line& line : grid.lines) {
    if (line.from >= n || line.to >= n) {
      throw GridError("line (" + std::to_string(line.from) + ", " +
                      std::to_string(line.to) + ") references a missing bus");
    }
    if (line.from == line.to) {
      throw GridError("line (" + std::to_string(line.from) + ", " +
                      std::to_string(line.to) + ") is a self-loop");
    }
    line_admittance(line);
    auto key = std::minmax(line.from, line.to);
    if (!seen.insert({key.first, key.second}).second) {
      throw GridError("duplicate line between buses " + std::to_string(key.first) +
                      " and " + std::to_string(key.second));
    }
  }
}

std::vector<std::vector<std::size_t>> connected_components(const GridSpec& grid) {
  const std::size_t n = grid.bus_count();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  for (const Line& line : grid.lines) {
    if (line.from >= n || line.to >= n) continue;
    const std::size_t a = find(line.from);
    const std::size_t b = find(line.to);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }

  std::vector<std::vector<std::size_t>> components;
  std::vector<std::size_t> slot(n, GroundedLaplacians::npos);
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t root = find(v);
    if (slot[root] == GroundedLaplacians::npos) {
      slot[root] = components.size();
      components.emplace_back();
    }
    components[slot[root]].push_back(v);
  }
  return components;
}

void check_connectivity(const GridSpec& grid) {
  const auto components = connected_components(grid);
  if (components.size() <= 1) return;
  std::ostringstream msg;
  msg << "grid is disconnected: " << components.size() << " components";
  for (const auto& component : components) {
    msg << " {";
    for (std::size_t i = 0; i < component.size(); ++i) {
      msg << (i ? ", " : "") << component[i];
    }
    msg << "}";
  }
  throw GridError(msg.str());
}

Laplacians build_laplacians(const GridSpec& grid) {
  const auto n = static_cast<Eigen::Index>(grid.bus_count());
  Laplacians lap{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  for (const Line& line : grid.lines) {
    const Admittance y = line_admittance(line);
    const auto i = static_cast<Eigen::Index>(line.from);
    const auto j = static_cast<Eigen::Index>(line.to);
    for (auto [mat, w] : {std::pair{&lap.conductance, y.g}, std::pair{&lap.susceptance, y.b}}) {
      (*mat)(i, i) += w;
      (*mat)(j, j) += w;
      (*mat)(i, j) -= w;
      (*mat)(j, i) -= w;
    }
  }
  return lap;
}

Eigen::MatrixXd ground(const Eigen::MatrixXd& laplacian, std::size_t k) {
  const Eigen::Index n = laplacian.rows();
  if (laplacian.cols() != n) throw GridError("ground: matrix is not square");
  if (k >= static_cast<std::size_t>(n)) {
    throw GridError("ground: index " + std::to_string(k) + " out of range for a " +
                    std::to_string(n) + "x" + std::to_string(n) + " matrix");
  }
  const auto kk = static_cast<Eigen::Index>(k);
  const Eigen::Index tail = n - kk - 1;
  Eigen::MatrixXd out(n - 1, n - 1);
  out.topLeftCorner(kk, kk) = laplacian.topLeftCorner(kk, kk);
  out.topRightCorner(kk, tail) = laplacian.topRightCorner(kk, tail);
  out.bottomLeftCorner(tail, kk) = laplacian.bottomLeftCorner(tail, kk);
  out.bottomRightCorner(tail, tail) = laplacian.bottomRightCorner(tail, tail);
  return out;
}

GroundedLaplacians grounded_laplacians(const GridSpec& grid) {
  validate(grid);
  check_connectivity(grid);
  const Laplacians full = build_laplacians(grid);

  GroundedLaplacians out;
  out.ground_bus = grid.ground_bus;
  out.conductance = ground(full.conductance, grid.ground_bus);
  out.susceptance = ground(full.susceptance, grid.ground_bus);
  out.reduced_index.assign(grid.bus_count(), GroundedLaplacians::npos);
  std::size_t next = 0;
  for (std::size_t i = 0; i < grid.bus_count(); ++i) {
    if (i != grid.ground_bus) out.reduced_index[i] = next++;
  }
  return out;
}

}  // namespace stochswing
