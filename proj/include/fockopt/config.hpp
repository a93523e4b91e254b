// Copyright 2026 The fockopt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Problem configuration files.
//
// Flat "key = value" lines with one nested block for the target state:
//
//   modes = 6
//   photons = 4
//   input = 111100
//   pattern = 11
//   target {
//     0011  0.7071067811865476,0
//     1100  -0.7071067811865476,0
//   }
//   seed = 1
//
// '#' starts a comment. "pattern = -" heralds on no modes. Optional keys: eps_R, eps_T, max_iters, seed, runs,
// workers, p.

#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fockopt/fock.hpp"
#include "fockopt/herald.hpp"
#include "fockopt/matrix_io.hpp"
#include "fockopt/solver.hpp"

namespace fockopt {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& field, const std::string& message)
      : std::runtime_error(format(source, line, field, message)), line_(line), field_(field) {}

  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  static std::string format(const std::string& source, int line, const std::string& field, const std::string& message) {
    std::string out = source;
    if (line > 0) out += ":" + std::to_string(line);
    if (!field.empty()) out += ": " + field;
    return out + ": " + message;
  }

  int line_;
  std::string field_;
};

struct ProblemConfig {
  int modes = 0;
  int photons = 0;
  Occupation input;
  Occupation pattern;
  std::vector<TargetTerm> target;

  std::optional<double> eps_r;
  std::optional<double> eps_t;
  std::optional<int> max_iters;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<int> workers;
  std::optional<double> p;

  /// Non-fatal notes collected while loading.
  std::vector<std::string> warnings;

  HeraldingProblem problem() const { return HeraldingProblem(modes, photons, input, pattern, target); }

  SolverConfig solver() const {
    SolverConfig cfg;
    if (eps_r) cfg.eps_r = *eps_r;
    if (eps_t) cfg.eps_t = *eps_t;
    if (max_iters) cfg.max_outer_iters = *max_iters;
    if (seed) cfg.seed = *seed;
    return cfg;
  }

  BaselineConfig baseline() const {
    BaselineConfig cfg;
    if (p) cfg.p = *p;
    if (seed) cfg.seed = *seed;
    return cfg;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& text, const std::string& source, int line, const std::string& key) {
  std::istringstream is(text);
  T value{};
  if (!(is >> value) || !(is >> std::ws).eof())
    throw ConfigError(source, line, key, "'" + text + "' is not a valid number");
  return value;
}

inline Occupation parse_occupation_field(const std::string& text, const std::string& source, int line,
                                         const std::string& key) {
  try {
    return parse_occupation(text);
  } catch (const std::exception& e) {
    throw ConfigError(source, line, key, e.what());
  }
}

}  // namespace detail

inline ProblemConfig parse_config(std::istream& is, const std::string& source = "<config>") {
  ProblemConfig cfg;
  bool has_modes = false, has_photons = false, has_input = false, has_pattern = false, has_target = false;
  bool in_target = false;
  int target_line = 0;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const std::string text = detail::trim(raw.substr(0, raw.find('#')));
    if (text.empty()) continue;

    if (in_target) {
      if (text == "}") {
        in_target = false;
        continue;
      }
      std::istringstream row(text);
      std::string occ, amp, extra;
      if (!(row >> occ >> amp) || (row >> extra))
        throw ConfigError(source, line, "target", "expected '<occupation> <re,im>', got '" + text + "'");
      cplx a;
      try {
        a = parse_complex(amp);
      } catch (const MatrixFormatError& e) {
        throw ConfigError(source, line, "target", e.what());
      }
      cfg.target.push_back({detail::parse_occupation_field(occ, source, line, "target"), a});
      continue;
    }

    if (text == "target {" || text == "target{") {
      if (has_target) throw ConfigError(source, line, "target", "block given twice");
      in_target = has_target = true;
      target_line = line;
      continue;
    }

    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line, "", "expected 'key = value', got '" + text + "'");
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (value.empty()) throw ConfigError(source, line, key, "missing value");

    if (key == "modes") {
      cfg.modes = detail::parse_number<int>(value, source, line, key);
      has_modes = true;
    } else if (key == "photons") {
      cfg.photons = detail::parse_number<int>(value, source, line, key);
      has_photons = true;
    } else if (key == "input") {
      cfg.input = detail::parse_occupation_field(value, source, line, key);
      has_input = true;
    } else if (key == "pattern") {
      cfg.pattern = value == "-" ? Occupation{} : detail::parse_occupation_field(value, source, line, key);
      has_pattern = true;
    } else if (key == "eps_R") {
      cfg.eps_r = detail::parse_number<double>(value, source, line, key);
    } else if (key == "eps_T") {
      cfg.eps_t = detail::parse_number<double>(value, source, line, key);
    } else if (key == "max_iters") {
      cfg.max_iters = detail::parse_number<int>(value, source, line, key);
    } else if (key == "seed") {
      cfg.seed = detail::parse_number<std::uint64_t>(value, source, line, key);
    } else if (key == "runs") {
      cfg.runs = detail::parse_number<int>(value, source, line, key);
    } else if (key == "workers") {
      cfg.workers = detail::parse_number<int>(value, source, line, key);
    } else if (key == "p") {
      cfg.p = detail::parse_number<double>(value, source, line, key);
    } else {
      throw ConfigError(source, line, key, "unknown key");
    }
  }
  if (in_target) throw ConfigError(source, target_line, "target", "block is not closed");

  auto require = [&](bool present, const char* key) {
    if (!present) throw ConfigError(source, 0, key, "required key is missing");
  };
  require(has_modes, "modes");
  require(has_photons, "photons");
  require(has_input, "input");
  require(has_pattern, "pattern");
  require(has_target, "target");
  if (cfg.target.empty()) throw ConfigError(source, target_line, "target", "block is empty");

  if (cfg.modes < 1) throw ConfigError(source, 0, "modes", "must be positive");
  if (static_cast<int>(cfg.input.size()) != cfg.modes)
    throw ConfigError(source, 0, "input", to_string(cfg.input) + " does not have " + std::to_string(cfg.modes) + " modes");
  if (total_photons(cfg.input) != cfg.photons)
    throw ConfigError(source, 0, "input", to_string(cfg.input) + " does not hold " + std::to_string(cfg.photons) + " photons");
  if (static_cast<int>(cfg.pattern.size()) >= cfg.modes)
    throw ConfigError(source, 0, "pattern", "must cover fewer than " + std::to_string(cfg.modes) + " modes");
  if (total_photons(cfg.pattern) > cfg.photons)
    throw ConfigError(source, 0, "pattern", "needs more photons than the input provides");
  if (cfg.runs && *cfg.runs < 1) throw ConfigError(source, 0, "runs", "must be at least 1");
  if (cfg.p && !(*cfg.p >= 1.0)) throw ConfigError(source, 0, "p", "must be at least 1");

  double norm2 = 0.0;
  for (const auto& t : cfg.target) norm2 += std::norm(t.amplitude);
  if (!(norm2 > 0.0)) throw ConfigError(source, target_line, "target", "amplitudes are all zero");
  const double norm = std::sqrt(norm2);
  if (std::abs(norm - 1.0) > 1e-6)
    cfg.warnings.push_back(source + ": target norm " + format_double(norm) + " renormalized to 1");
  for (auto& t : cfg.target) t.amplitude /= norm;

  try {
    (void)cfg.problem();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source, 0, "", e.what());
  }
  return cfg;
}

inline ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "", "cannot open file");
  return parse_config(in, path);
}

}  // namespace fockopt
