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

// Fixed-photon-number Fock spaces, ladder operators, and the map from an
// N x N scattering matrix to the unitary it induces on n photons.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fockopt/linalg.hpp"

namespace fockopt {

/// Photon count per mode, e.g. {1,1,1,0} for |1110>.
using Occupation = std::vector<int>;

inline int total_photons(const Occupation& occ) { return std::accumulate(occ.begin(), occ.end(), 0); }

inline std::string to_string(const Occupation& occ) {
  std::string s;
  for (int c : occ) s += std::to_string(c);
  return s;
}

/// Parses "1110" style strings; one decimal digit per mode.
inline Occupation parse_occupation(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty occupation string");
  Occupation occ;
  occ.reserve(text.size());
  for (char ch : text) {
    if (ch < '0' || ch > '9')
      throw std::invalid_argument("occupation string '" + std::string(text) + "' contains non-digit '" +
                                  std::string(1, ch) + "'");
    occ.push_back(ch - '0');
  }
  return occ;
}

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

/// Occupation-number basis of n photons in N modes.
///
/// Ordering: descending lexicographic (|n0...0>, ..., |0...0n>), except that an
/// optional pinned state is moved to index 0 with the rest keeping their order.
class FockSpace {
 public:
  FockSpace(int modes, int photons, const std::optional<Occupation>& pinned = std::nullopt)
      : modes_(modes), photons_(photons) {
    if (modes < 1) throw std::invalid_argument("FockSpace needs at least one mode");
    if (photons < 0) throw std::invalid_argument("FockSpace needs a nonnegative photon count");
    if (pinned) {
      if (static_cast<int>(pinned->size()) != modes)
        throw std::invalid_argument("pinned state " + to_string(*pinned) + " has " +
                                    std::to_string(pinned->size()) + " modes, expected " + std::to_string(modes));
      if (std::any_of(pinned->begin(), pinned->end(), [](int c) { return c < 0; }) ||
          total_photons(*pinned) != photons)
        throw std::invalid_argument("pinned state " + to_string(*pinned) + " does not hold " +
                                    std::to_string(photons) + " photons");
    }
    Occupation current(modes, 0);
    enumerate(0, photons, current);
    if (pinned) {
      auto it = std::find(basis_.begin(), basis_.end(), *pinned);
      std::rotate(basis_.begin(), it, it + 1);
    }
    for (std::size_t i = 0; i < basis_.size(); ++i) index_.emplace(basis_[i], static_cast<Index>(i));
  }

  int modes() const { return modes_; }
  int photons() const { return photons_; }
  Index dim() const { return static_cast<Index>(basis_.size()); }
  const std::vector<Occupation>& basis() const { return basis_; }
  const Occupation& state(Index i) const { return basis_.at(static_cast<std::size_t>(i)); }

  std::optional<Index> find(const Occupation& occ) const {
    auto it = index_.find(occ);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  Index index_of(const Occupation& occ) const {
    if (auto i = find(occ)) return *i;
    throw std::invalid_argument("state " + to_string(occ) + " is not in the " + std::to_string(photons_) +
                                "-photon, " + std::to_string(modes_) + "-mode basis");
  }

 private:
  void enumerate(int mode, int remaining, Occupation& current) {
    if (mode == modes_ - 1) {
      current[mode] = remaining;
      basis_.push_back(current);
      return;
    }
    for (int c = remaining; c >= 0; --c) {
      current[mode] = c;
      enumerate(mode + 1, remaining - c, current);
    }
  }

  int modes_;
  int photons_;
  std::vector<Occupation> basis_;
  std::map<Occupation, Index> index_;
};

using FockSpacePtr = std::shared_ptr<const FockSpace>;

inline FockSpacePtr enumerate_basis(int modes, int photons, const std::optional<Occupation>& hint = std::nullopt) {
  return std::make_shared<const FockSpace>(modes, photons, hint);
}

struct SparseEntry {
  Index row;
  Index col;
  double value;
};

/// Real sparse matrix in triplet form. Ladder bilinears have at most one
/// entry per row and column, so plain loops beat a general sparse format.
class SparseOp {
 public:
  SparseOp() = default;
  SparseOp(Index rows, Index cols) : rows_(rows), cols_(cols) {}

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  const std::vector<SparseEntry>& entries() const { return entries_; }
  void add(Index r, Index c, double v) { entries_.push_back({r, c, v}); }

  CMatrix dense() const {
    CMatrix m = CMatrix::Zero(rows_, cols_);
    for (const auto& e : entries_) m(e.row, e.col) += e.value;
    return m;
  }

  double trace() const {
    double t = 0.0;
    for (const auto& e : entries_)
      if (e.row == e.col) t += e.value;
    return t;
  }

  /// out = this * x
  template <typename Derived>
  CMatrix left_multiply(const Eigen::MatrixBase<Derived>& x) const {
    CMatrix out = CMatrix::Zero(rows_, x.cols());
    for (const auto& e : entries_) out.row(e.row) += e.value * x.row(e.col);
    return out;
  }

  /// out = x * this
  template <typename Derived>
  CMatrix right_multiply(const Eigen::MatrixBase<Derived>& x) const {
    CMatrix out = CMatrix::Zero(x.rows(), cols_);
    for (const auto& e : entries_) out.col(e.col) += e.value * x.col(e.row);
    return out;
  }

  CVector apply(const CVector& v) const {
    CVector out = CVector::Zero(rows_);
    for (const auto& e : entries_) out(e.row) += e.value * v(e.col);
    return out;
  }

  /// Tr(this * x)
  template <typename Derived>
  cplx trace_product(const Eigen::MatrixBase<Derived>& x) const {
    cplx t = 0.0;
    for (const auto& e : entries_) t += e.value * x(e.col, e.row);
    return t;
  }

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<SparseEntry> entries_;
};

/// Matrix of a^dagger_i a_j on the given basis.
inline SparseOp ladder_generator(const FockSpace& space, int i, int j) {
  const int n_modes = space.modes();
  if (i < 0 || j < 0 || i >= n_modes || j >= n_modes)
    throw std::invalid_argument("ladder_generator: mode index (" + std::to_string(i) + "," + std::to_string(j) +
                                ") out of range for " + std::to_string(n_modes) + " modes");
  SparseOp op(space.dim(), space.dim());
  for (Index col = 0; col < space.dim(); ++col) {
    const Occupation& occ = space.state(col);
    if (i == j) {
      if (occ[i] != 0) op.add(col, col, occ[i]);
      continue;
    }
    if (occ[j] == 0) continue;
    Occupation out = occ;
    out[j] -= 1;
    out[i] += 1;
    op.add(space.index_of(out), col, std::sqrt(static_cast<double>(out[i]) * occ[j]));
  }
  return op;
}

/// Matrix of a_j mapping the n-photon basis onto the (n-1)-photon basis.
inline SparseOp annihilator(const FockSpace& from, const FockSpace& to, int j) {
  if (to.photons() + 1 != from.photons() || to.modes() != from.modes())
    throw std::invalid_argument("annihilator: incompatible spaces");
  SparseOp op(to.dim(), from.dim());
  for (Index col = 0; col < from.dim(); ++col) {
    const Occupation& occ = from.state(col);
    if (occ[j] == 0) continue;
    Occupation out = occ;
    out[j] -= 1;
    op.add(to.index_of(out), col, std::sqrt(static_cast<double>(occ[j])));
  }
  return op;
}

/// N x N unitary mode transformation: a^dagger_j -> sum_i S_ij a^dagger_i.
class ScatteringMatrix {
 public:
  static constexpr double kUnitarityTolerance = 1e-12;

  explicit ScatteringMatrix(CMatrix entries, double tolerance = kUnitarityTolerance)
      : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() == 0)
      throw std::invalid_argument("scattering matrix must be square and non-empty, got " +
                                  std::to_string(entries_.rows()) + "x" + std::to_string(entries_.cols()));
    const double defect = unitarity_defect(entries_);
    if (!(defect <= tolerance))
      throw std::invalid_argument("scattering matrix is not unitary: max|S^H S - 1| = " + std::to_string(defect));
  }

  int modes() const { return static_cast<int>(entries_.rows()); }
  const CMatrix& matrix() const { return entries_; }
  cplx operator()(Index i, Index j) const { return entries_(i, j); }

 private:
  CMatrix entries_;
};

/// Dense unitary on a Fock space.
struct FockUnitary {
  CMatrix matrix;
  FockSpacePtr space;

  double unitarity_defect() const { return fockopt::unitarity_defect(matrix); }
};

/// Exact permanent by Ryser's formula with Gray-code subset iteration.
inline cplx permanent(const CMatrix& a) {
  constexpr Index kMaxSize = 16;
  if (a.rows() != a.cols()) throw std::invalid_argument("permanent: matrix must be square");
  const Index k = a.rows();
  if (k > kMaxSize) throw std::length_error("permanent: size " + std::to_string(k) + " exceeds oracle limit 16");
  if (k == 0) return 1.0;
  CVector row_sums = CVector::Zero(k);
  cplx total = 0.0;
  std::uint64_t gray = 0;
  const std::uint64_t subsets = std::uint64_t{1} << k;
  for (std::uint64_t step = 1; step < subsets; ++step) {
    const int bit = __builtin_ctzll(step);
    const std::uint64_t mask = std::uint64_t{1} << bit;
    if (gray & mask) {
      row_sums -= a.col(bit);
    } else {
      row_sums += a.col(bit);
    }
    gray ^= mask;
    cplx prod = row_sums.prod();
    total += (__builtin_popcountll(gray) & 1) ? -prod : prod;
  }
  return (k & 1) ? -total : total;
}

namespace detail {

inline std::vector<Index> expand_occupation(const Occupation& occ) {
  std::vector<Index> out;
  for (std::size_t i = 0; i < occ.size(); ++i)
    for (int c = 0; c < occ[i]; ++c) out.push_back(static_cast<Index>(i));
  return out;
}

inline double occupation_norm(const Occupation& occ) {
  double f = 1.0;
  for (int c : occ) f *= factorial(c);
  return f;
}

}  // namespace detail

/// <out| U(S) |in> evaluated directly from a permanent.
inline cplx amplitude_oracle(const CMatrix& s, const Occupation& in, const Occupation& out) {
  if (static_cast<Index>(in.size()) != s.cols() || static_cast<Index>(out.size()) != s.rows())
    throw std::invalid_argument("amplitude_oracle: occupation length does not match the scattering matrix");
  if (total_photons(in) != total_photons(out))
    throw std::invalid_argument("amplitude_oracle: photon number mismatch between " + to_string(in) + " and " +
                                to_string(out));
  const auto rows = detail::expand_occupation(out);
  const auto cols = detail::expand_occupation(in);
  CMatrix sub(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = 0; b < cols.size(); ++b) sub(a, b) = s(rows[a], cols[b]);
  return permanent(sub) / std::sqrt(detail::occupation_norm(in) * detail::occupation_norm(out));
}

inline cplx amplitude_oracle(const ScatteringMatrix& s, const Occupation& in, const Occupation& out) {
  return amplitude_oracle(s.matrix(), in, out);
}

namespace detail {

/// Fock-space image of exp(L) for an anti-Hermitian mode generator L.
inline CMatrix exponentiate_generator(const CMatrix& log_s, const FockSpace& space) {
  const int n_modes = space.modes();
  CMatrix herm = CMatrix::Zero(space.dim(), space.dim());
  for (int i = 0; i < n_modes; ++i)
    for (int j = 0; j < n_modes; ++j) {
      const cplx coeff = -kI * log_s(i, j);
      if (std::abs(coeff) == 0.0) continue;
      const SparseOp op = ladder_generator(space, i, j);
      for (const auto& e : op.entries()) herm(e.row, e.col) += coeff * e.value;
    }
  herm = hermitian_part(herm);
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(herm);
  const CMatrix& v = eig.eigenvectors();
  CVector phases = (kI * eig.eigenvalues().cast<cplx>()).array().exp();
  return v * phases.asDiagonal() * v.adjoint();
}

}  // namespace detail

/// U(S) = exp(sum_ij (log S)_ij a^dagger_i a_j) on the given space.
///
/// log S is the principal logarithm from a Schur form. When S has an eigenvalue
/// within 1e-8 of -1, S is multiplied by a global phase first and the induced
/// phase e^{i n chi} is removed from U afterwards.
inline FockUnitary lift_unitary(const ScatteringMatrix& s, const FockSpacePtr& space) {
  if (s.modes() != space->modes())
    throw std::invalid_argument("lift_unitary: scattering matrix has " + std::to_string(s.modes()) +
                                " modes, space has " + std::to_string(space->modes()));
  constexpr double kBranchCut = 1e-8;
  const int n_photons = space->photons();
  Rng rng(0x5eed);
  std::uniform_real_distribution<double> angle(0.1, 3.0);
  double chi = 0.0;
  for (int attempt = 0; attempt < 16; ++attempt) {
    const CMatrix shifted = std::exp(kI * chi) * s.matrix();
    Eigen::ComplexSchur<CMatrix> schur(shifted);
    const CMatrix& t = schur.matrixT();
    bool near_cut = false;
    CVector logs(t.rows());
    for (Index k = 0; k < t.rows(); ++k) {
      if (std::abs(t(k, k) + 1.0) < kBranchCut) near_cut = true;
      logs(k) = std::log(t(k, k));
    }
    if (near_cut) {
      chi = angle(rng);
      continue;
    }
    const CMatrix& q = schur.matrixU();
    CMatrix log_s = q * logs.asDiagonal() * q.adjoint();
    log_s = (log_s - log_s.adjoint()) * 0.5;
    CMatrix u = detail::exponentiate_generator(log_s, *space);
    if (chi != 0.0) u *= std::exp(-kI * (chi * n_photons));
    return FockUnitary{std::move(u), space};
  }
  throw std::runtime_error("lift_unitary: could not move the spectrum off the logarithm branch cut");
}

/// Fock-space unitary assembled element by element from permanents (test oracle).
inline CMatrix lift_by_permanents(const CMatrix& s, const FockSpace& space) {
  CMatrix u(space.dim(), space.dim());
  for (Index r = 0; r < space.dim(); ++r)
    for (Index c = 0; c < space.dim(); ++c) u(r, c) = amplitude_oracle(s, space.state(c), space.state(r));
  return u;
}

}  // namespace fockopt
