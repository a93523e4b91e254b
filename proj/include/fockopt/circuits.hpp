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

#ifndef FOCKOPT_CIRCUITS_HPP_
#define FOCKOPT_CIRCUITS_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fockopt/fock.hpp"
#include "fockopt/herald.hpp"
#include "fockopt/linalg.hpp"
#include "fockopt/matrix_io.hpp"

namespace fockopt {

/// One-parameter family of 6-mode Bell-state interferometers.
///
///   row 0:  1/2   -1/2   1/2   -1/2    0     0
///   row 1:  1/2   -1/2  -1/2    1/2    0     0
///   row 2:  a      a     b      b     -g     0
///   row 3:  b      b    -a     -a      0    -g
///   row 4:  d      d    -s     -s      nu    mu
///   row 5:  s      s     d      d      mu   -nu
///
/// with a + ib = e^{i phi} cos(theta)/sqrt2, d + is = e^{i psi} sin(theta)/sqrt2,
/// tan(2 psi) = 2 tan(2 phi), cos^2(theta) = sin(2 phi), g = sin(theta) and
/// nu + i mu = e^{i(phi + psi)} cos(theta).
struct BellAnsatz {
  double phi = 0.0;
  double psi = 0.0;
  double theta = 0.0;
  double x = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  double sigma = 0.0;
  double mu = 0.0;
  double nu = 0.0;

  CMatrix matrix() const {
    CMatrix s(6, 6);
    s << 0.5, -0.5, 0.5, -0.5, 0.0, 0.0,  //
        0.5, -0.5, -0.5, 0.5, 0.0, 0.0,   //
        alpha, alpha, beta, beta, -gamma, 0.0,  //
        beta, beta, -alpha, -alpha, 0.0, -gamma,  //
        delta, delta, -sigma, -sigma, nu, mu,  //
        sigma, sigma, delta, delta, mu, -nu;
    return s;
  }
};

/// Ansatz parameters for phi in (0, pi/4).
inline BellAnsatz bell_ansatz(double phi) {
  if (!(phi > 0.0 && phi < std::numbers::pi / 4))
    throw std::invalid_argument("ansatz angle phi = " + format_double(phi) + " is outside (0, pi/4)");
  BellAnsatz a;
  a.phi = phi;
  a.x = std::sin(2.0 * phi);
  a.psi = 0.5 * std::atan2(2.0 * std::sin(2.0 * phi), std::cos(2.0 * phi));
  a.theta = std::acos(std::sqrt(a.x));
  const double r = 1.0 / std::sqrt(2.0);
  const double c = std::cos(a.theta);
  const double s = std::sin(a.theta);
  a.alpha = r * c * std::cos(phi);
  a.beta = r * c * std::sin(phi);
  a.delta = r * s * std::cos(a.psi);
  a.sigma = r * s * std::sin(a.psi);
  a.gamma = s;
  a.nu = c * std::cos(phi + a.psi);
  a.mu = c * std::sin(phi + a.psi);
  return a;
}

/// The phi on the admissible branch with sin(2 phi) = x.
inline double ansatz_angle(double x) {
  if (!(x > 0.0 && x < 1.0)) throw std::invalid_argument("ansatz parameter x = " + format_double(x) + " is outside (0, 1)");
  return 0.5 * std::asin(x);
}

inline ScatteringMatrix ansatz_matrix(double phi) { return ScatteringMatrix(bell_ansatz(phi).matrix()); }

/// P(x) = 2 (1-x)^2 x^2 / (1 + 3 x^2).
inline double success_curve(double x) {
  const double y = 1.0 - x;
  return 2.0 * y * y * x * x / (1.0 + 3.0 * x * x);
}

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  friend bool operator==(const Rational&, const Rational&) = default;
};

/// P(p/q) in lowest terms.
inline Rational success_curve_exact(std::int64_t p, std::int64_t q) {
  if (q <= 0 || p <= 0 || p >= q) throw std::invalid_argument("success_curve_exact needs 0 < p/q < 1");
  const std::int64_t g0 = std::gcd(p, q);
  p /= g0;
  q /= g0;
  const std::int64_t num = 2 * (q - p) * (q - p) * p * p;
  const std::int64_t den = q * q * (q * q + 3 * p * p);
  const std::int64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

/// Root of dP/dx = 0 in (0, 1): 3x^3 + 2x - 1 = 0.
inline double optimal_x() {
  const double r = std::sqrt(113.0);
  const double x = (std::cbrt((r + 9.0) / 2.0) - std::cbrt((r - 9.0) / 2.0)) / 3.0;
  const double h = 1e-5;
  const double slope = (success_curve(x + h) - success_curve(x - h)) / (2.0 * h);
  if (std::abs(slope) > 1e-9) throw std::logic_error("optimal_x: slope " + format_double(slope) + " is not zero");
  return x;
}

/// Bell-state heralding problem on 6 modes: |111100>, pattern 11, target
/// (|0011> - |1100>)/sqrt2.
inline HeraldingProblem bell6_problem() {
  const double r = 1.0 / std::sqrt(2.0);
  return HeraldingProblem(6, 4, parse_occupation("111100"), parse_occupation("11"),
                          {{parse_occupation("0011"), r}, {parse_occupation("1100"), -r}});
}

struct HeraldReport {
  /// |<a, c>|^2 / |c|^2 over the heralded amplitudes c.
  double fidelity = 0.0;
  /// |<a, c>|^2.
  double probability = 0.0;
  /// |c|^2: probability of observing the pattern.
  double pattern_probability = 0.0;
  /// Largest amplitude on an output with a multiply occupied mode.
  double max_multiple_occupation = 0.0;
  std::vector<std::pair<Occupation, cplx>> amplitudes;
};

/// Heralded amplitudes <k, m| U(S) |n> from permanents.
inline HeraldReport verify_heralded_state(const ScatteringMatrix& s, const HeraldingProblem& prob) {
  HeraldReport out;
  if (s.modes() != prob.modes()) throw std::invalid_argument("verify_heralded_state: mode count mismatch");
  CVector c(prob.output_dim());
  for (Index a = 0; a < prob.output_dim(); ++a) {
    const Occupation& k = prob.outputs()[static_cast<std::size_t>(a)];
    Occupation full = k;
    full.insert(full.end(), prob.pattern().begin(), prob.pattern().end());
    c(a) = amplitude_oracle(s, prob.input(), full);
    out.amplitudes.emplace_back(k, c(a));
    for (int n : k)
      if (n > 1) out.max_multiple_occupation = std::max(out.max_multiple_occupation, std::abs(c(a)));
  }
  out.pattern_probability = c.squaredNorm();
  out.probability = std::norm(prob.target().dot(c));
  out.fidelity = out.pattern_probability > 0.0 ? out.probability / out.pattern_probability : 0.0;
  return out;
}

struct MeshElement {
  enum class Kind { kSplitter, kPhase };
  Kind kind = Kind::kSplitter;
  /// Splitters act on (mode, mode + 1); phase shifts on mode.
  int mode = 0;
  double theta = 0.0;
  double phase = 0.0;

  /// [[c, -s], [s, c]] on (mode, mode+1), or e^{i phase} on mode.
  CMatrix matrix(int modes) const {
    CMatrix m = CMatrix::Identity(modes, modes);
    if (kind == Kind::kPhase) {
      m(mode, mode) = std::exp(kI * phase);
    } else {
      const double c = std::cos(theta);
      const double s = std::sin(theta);
      m(mode, mode) = c;
      m(mode, mode + 1) = -s;
      m(mode + 1, mode) = s;
      m(mode + 1, mode + 1) = c;
    }
    return m;
  }
};

/// Elements in the order light meets them: S = E_last ... E_first.
struct MeshDecomposition {
  int modes = 0;
  std::vector<MeshElement> elements;

  int splitter_count() const {
    int n = 0;
    for (const auto& e : elements) n += e.kind == MeshElement::Kind::kSplitter;
    return n;
  }

  CMatrix compose() const {
    CMatrix s = CMatrix::Identity(modes, modes);
    for (const auto& e : elements) s = e.matrix(modes) * s;
    return s;
  }

  /// One line per element: kind,mode_a,mode_b,theta_deg,phase_deg.
  std::string to_text() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(6);
    constexpr double kDeg = 180.0 / std::numbers::pi;
    for (const auto& e : elements) {
      const bool splitter = e.kind == MeshElement::Kind::kSplitter;
      os << (splitter ? "splitter" : "phase") << ',' << e.mode << ',' << (splitter ? e.mode + 1 : e.mode) << ','
         << e.theta * kDeg << ',' << e.phase * kDeg << '\n';
    }
    return os.str();
  }
};

namespace detail {

constexpr double kNullTolerance = 1e-14;

inline void push_phase(std::vector<MeshElement>& out, int mode, double phase) {
  const double wrapped = std::remainder(phase, 2.0 * std::numbers::pi);
  if (std::abs(wrapped) > kNullTolerance) out.push_back({MeshElement::Kind::kPhase, mode, 0.0, wrapped});
}

inline void push_splitter(std::vector<MeshElement>& out, int mode, double theta) {
  if (std::abs(theta) > kNullTolerance) out.push_back({MeshElement::Kind::kSplitter, mode, theta, 0.0});
}

/// (theta, phase) zeroing x c + y e^{i phase} s, or the identity when x is zero.
inline std::pair<double, double> nulling_angles(cplx x, cplx y) {
  if (std::abs(x) <= kNullTolerance) return {0.0, 0.0};
  if (std::abs(y) <= kNullTolerance) return {std::numbers::pi / 2, 0.0};
  return {std::atan2(std::abs(x), std::abs(y)), std::arg(x) - std::arg(y) + std::numbers::pi};
}

}  // namespace detail

/// Rectangular-mesh factorization into nearest-neighbour splitters and phase
/// shifts by alternating column and row eliminations.
inline MeshDecomposition clements_decompose(const ScatteringMatrix& s) {
  const int n = s.modes();
  CMatrix w = s.matrix();
  std::vector<MeshElement> first;  // inverses of the column operations, in light order
  std::vector<MeshElement> last;   // inverses of the row operations, in reverse light order

  for (int i = 0; i + 1 < n; ++i) {
    if (i % 2 == 0) {
      for (int j = 0; j <= i; ++j) {
        const int r = n - 1 - j;
        const int a = i - j;
        const int b = a + 1;
        // W <- W Ph_b(phi) T(theta) zeroes W(r, a)
        const auto [theta, phi] = detail::nulling_angles(w(r, a), w(r, b));
        if (theta == 0.0) continue;
        w.col(b) *= std::exp(kI * phi);
        const CVector ca = w.col(a);
        const CVector cb = w.col(b);
        w.col(a) = std::cos(theta) * ca + std::sin(theta) * cb;
        w.col(b) = -std::sin(theta) * ca + std::cos(theta) * cb;
        w(r, a) = 0.0;
        // inverse T(-theta) Ph_b(-phi): the phase meets light first
        detail::push_phase(first, b, -phi);
        detail::push_splitter(first, a, -theta);
      }
    } else {
      for (int j = 1; j <= i + 1; ++j) {
        const int b = n + j - i - 2;
        const int a = b - 1;
        const int c = j - 1;
        // W <- T(theta) Ph_a(phi) W zeroes W(b, c)
        const auto [theta, phi] = detail::nulling_angles(w(b, c), w(a, c));
        if (theta == 0.0) continue;
        w.row(a) *= std::exp(kI * phi);
        const CVector ra = w.row(a).transpose();
        const CVector rb = w.row(b).transpose();
        w.row(a) = (std::cos(theta) * ra - std::sin(theta) * rb).transpose();
        w.row(b) = (std::sin(theta) * ra + std::cos(theta) * rb).transpose();
        w(b, c) = 0.0;
        // inverse Ph_a(-phi) T(-theta): the splitter meets light first
        std::vector<MeshElement> pair;
        detail::push_splitter(pair, a, -theta);
        detail::push_phase(pair, a, -phi);
        last.insert(last.begin(), pair.begin(), pair.end());
      }
    }
  }

  MeshDecomposition out;
  out.modes = n;
  out.elements = std::move(first);
  for (int m = 0; m < n; ++m) detail::push_phase(out.elements, m, std::arg(w(m, m)));
  out.elements.insert(out.elements.end(), last.begin(), last.end());
  return out;
}

}  // namespace fockopt

#endif  // FOCKOPT_CIRCUITS_HPP_
