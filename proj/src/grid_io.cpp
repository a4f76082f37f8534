#include "stochswing/grid_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string_view>
#include <vector>

namespace stochswing {

ParseError::ParseError(std::size_t line, std::string section, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) +
                         (section.empty() ? std::string() : " [" + section + "]") + ": " + what),
      line_(line),
      section_(std::move(section)) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_words(std::string_view s) {
  std::vector<std::string_view> words;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto start = s.find_first_not_of(" \t", pos);
    if (start == std::string_view::npos) break;
    auto end = s.find_first_of(" \t", start);
    if (end == std::string_view::npos) end = s.size();
    words.push_back(s.substr(start, end - start));
    pos = end;
  }
  return words;
}

std::optional<double> to_double(std::string_view s) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::optional<std::size_t> to_index(std::string_view s) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::optional<bool> to_bool(std::string_view s) {
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  return std::nullopt;
}

enum class SectionKind { None, System, Bus, Line };

struct Section {
  SectionKind kind = SectionKind::None;
  std::string name;
  std::size_t header_line = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  std::map<std::string, std::pair<std::string, std::size_t>> entries;  // key -> (value, line)
};

class Reader {
 public:
  explicit Reader(const Section& section) : section_(section) {}

  double number(const std::string& key, std::optional<double> fallback) {
    const auto it = section_.entries.find(key);
    if (it == section_.entries.end()) {
      if (!fallback) {
        throw ParseError(section_.header_line, section_.name, "missing required key '" + key + "'");
      }
      return *fallback;
    }
    const auto value = to_double(it->second.first);
    if (!value) {
      throw ParseError(it->second.second, section_.name,
                       "'" + key + "' is not a finite number: '" + it->second.first + "'");
    }
    return *value;
  }

  bool flag(const std::string& key, bool fallback) {
    const auto it = section_.entries.find(key);
    if (it == section_.entries.end()) return fallback;
    const auto value = to_bool(it->second.first);
    if (!value) {
      throw ParseError(it->second.second, section_.name,
                       "'" + key + "' must be true or false, got '" + it->second.first + "'");
    }
    return *value;
  }

  std::optional<std::pair<std::string, std::size_t>> raw(const std::string& key) const {
    const auto it = section_.entries.find(key);
    if (it == section_.entries.end()) return std::nullopt;
    return it->second;
  }

 private:
  const Section& section_;
};

const std::set<std::string>& allowed_keys(SectionKind kind) {
  static const std::set<std::string> system{"ground_bus", "eta", "kappa", "noise_coupling"};
  static const std::set<std::string> bus{"inertia_mean", "inertia_std", "damping",
                                         "noise_active", "shunt_conductance"};
  static const std::set<std::string> line{"r", "x"};
  static const std::set<std::string> none;
  switch (kind) {
    case SectionKind::System: return system;
    case SectionKind::Bus: return bus;
    case SectionKind::Line: return line;
    case SectionKind::None: break;
  }
  return none;
}

Section parse_header(std::string_view body, std::size_t line_no) {
  Section s;
  s.header_line = line_no;
  s.name = std::string(trim(body));
  const auto words = split_words(body);
  if (words.empty()) throw ParseError(line_no, "", "empty section header");
  if (words[0] == "system" && words.size() == 1) {
    s.kind = SectionKind::System;
  } else if (words[0] == "bus" && words.size() == 2) {
    const auto i = to_index(words[1]);
    if (!i) throw ParseError(line_no, s.name, "bus index is not a nonnegative integer");
    s.kind = SectionKind::Bus;
    s.i = *i;
  } else if (words[0] == "line" && words.size() == 3) {
    const auto i = to_index(words[1]);
    const auto j = to_index(words[2]);
    if (!i || !j) throw ParseError(line_no, s.name, "line endpoints must be nonnegative integers");
    s.kind = SectionKind::Line;
    s.i = *i;
    s.j = *j;
  } else {
    throw ParseError(line_no, s.name,
                     "unknown section; expected [system], [bus <i>] or [line <i> <j>]");
  }
  return s;
}

}  // namespace

GridFile parse_grid(std::istream& in) {
  std::vector<Section> sections;
  std::string raw_line;
  std::size_t line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    std::string_view text = raw_line;
    if (const auto hash = text.find_first_of("#;"); hash != std::string_view::npos) {
      text = text.substr(0, hash);
    }
    text = trim(text);
    if (text.empty()) continue;

    if (text.front() == '[') {
      if (text.back() != ']') throw ParseError(line_no, "", "unterminated section header");
      sections.push_back(parse_header(text.substr(1, text.size() - 2), line_no));
      continue;
    }

    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(line_no, sections.empty() ? "" : sections.back().name,
                       "expected 'key = value'");
    }
    if (sections.empty()) throw ParseError(line_no, "", "key outside of any section");
    Section& current = sections.back();
    const std::string key(trim(text.substr(0, eq)));
    const std::string value(trim(text.substr(eq + 1)));
    if (!allowed_keys(current.kind).contains(key)) {
      throw ParseError(line_no, current.name, "unknown key '" + key + "'");
    }
    if (value.empty()) throw ParseError(line_no, current.name, "empty value for '" + key + "'");
    if (!current.entries.emplace(key, std::pair{value, line_no}).second) {
      throw ParseError(line_no, current.name, "repeated key '" + key + "'");
    }
  }

  GridFile file;
  std::map<std::size_t, Bus> buses;
  std::map<std::size_t, std::size_t> bus_lines;
  bool have_system = false;
  std::optional<std::size_t> ground;

  for (const Section& s : sections) {
    Reader reader(s);
    switch (s.kind) {
      case SectionKind::System: {
        if (have_system) throw ParseError(s.header_line, s.name, "repeated [system] section");
        have_system = true;
        if (const auto g = reader.raw("ground_bus")) {
          const auto idx = to_index(g->first);
          if (!idx) throw ParseError(g->second, s.name, "ground_bus must be a nonnegative integer");
          ground = *idx;
        }
        file.eta = reader.number("eta", 1.0);
        file.kappa = reader.number("kappa", 1.0);
        if (!(file.eta >= 0.0)) throw ParseError(s.header_line, s.name, "eta must be nonnegative");
        if (!(file.kappa > 0.0)) throw ParseError(s.header_line, s.name, "kappa must be positive");
        if (const auto c = reader.raw("noise_coupling")) {
          if (c->first == "common") {
            file.coupling = NoiseCoupling::Common;
          } else if (c->first == "independent") {
            file.coupling = NoiseCoupling::Independent;
          } else {
            throw ParseError(c->second, s.name,
                             "noise_coupling must be 'common' or 'independent'");
          }
        }
        break;
      }
      case SectionKind::Bus: {
        if (buses.contains(s.i)) {
          throw ParseError(s.header_line, s.name,
                           "bus " + std::to_string(s.i) + " already defined on line " +
                               std::to_string(bus_lines[s.i]));
        }
        Bus bus;
        bus.inertia_mean = reader.number("inertia_mean", std::nullopt);
        bus.inertia_std = reader.number("inertia_std", 0.0);
        bus.damping = reader.number("damping", std::nullopt);
        bus.noise_active = reader.flag("noise_active", true);
        bus.shunt_conductance = reader.number("shunt_conductance", 0.0);
        buses.emplace(s.i, bus);
        bus_lines.emplace(s.i, s.header_line);
        break;
      }
      case SectionKind::Line: {
        Line line;
        line.from = s.i;
        line.to = s.j;
        line.r = reader.number("r", std::nullopt);
        line.x = reader.number("x", std::nullopt);
        file.grid.lines.push_back(line);
        break;
      }
      case SectionKind::None:
        break;
    }
  }

  std::size_t expected = 0;
  for (const auto& [index, bus] : buses) {
    if (index != expected) {
      throw ParseError(bus_lines[index], "bus " + std::to_string(index),
                       "bus indices must be contiguous from 0; bus " + std::to_string(expected) +
                           " is missing");
    }
    file.grid.buses.push_back(bus);
    ++expected;
  }
  file.grid.ground_bus = ground.value_or(0);
  validate(file.grid);
  return file;
}

GridFile load_grid_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open grid file '" + path.string() + "'");
  return parse_grid(in);
}

}  // namespace stochswing
