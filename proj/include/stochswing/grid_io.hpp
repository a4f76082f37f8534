#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>

#include "stochswing/grid.hpp"
#include "stochswing/system.hpp"

namespace stochswing {

/// Error with the 1-based line number and the section being parsed.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::string section, const std::string& what);

  std::size_t line() const { return line_; }
  const std::string& section() const { return section_; }

 private:
  std::size_t line_;
  std::string section_;
};

/// Contents of a grid description file: the network plus the `[system]` block.
struct GridFile {
  GridSpec grid;
  double eta = 1.0;
  double kappa = 1.0;
  NoiseCoupling coupling = NoiseCoupling::Common;
};

/// Grammar (one statement per line, `#` or `;` starts a comment):
///
///     [system]            ground_bus, eta, kappa, noise_coupling (common | independent)
///     [bus <i>]           inertia_mean, inertia_std, damping, noise_active, shunt_conductance
///     [line <i> <j>]      r, x
///     <key> = <value>
///
/// inertia_mean, damping, r and x are required; everything else has a default.
/// Bus indices must be exactly 0..N. Unknown sections or keys, repeated keys
/// and repeated sections are rejected. The resulting GridSpec is validated
/// (GridError) but connectivity is left to the caller.
GridFile parse_grid(std::istream& in);
GridFile load_grid_file(const std::filesystem::path& path);

}  // namespace stochswing
