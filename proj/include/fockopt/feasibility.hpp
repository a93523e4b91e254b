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

// Linear-optics realizability of a Fock-space unitary U.
//
// The normalized bilinears gamma^{ij} = (a^dag_i a_j - (n/N) delta_ij)/sqrt(2K)
// form a tight frame of the traceless span W of mode generators. U is
// realizable by an interferometer iff W is invariant under conjugation, which
// is measured by the optical residual
//
//   R = 1 - 1/(N^2-1) sum_{ij,nm} |Tr[gamma^{ij} gbar^{nm}]|^2,
//   gbar^{nm} = U^H gamma^{nm} U.
//
// With r_ij = (1 - Pbar) gamma^{ij} (Pbar the orthogonal projector onto
// Span{gbar}) one has sum_ij ||r_ij||^2 = (N^2 - 1) R exactly; that identity
// fixes the normalization between the residual vector and R.
//
// Directions X are Hermitian and act as U -> U e^{iX}.

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fockopt/fock.hpp"
#include "fockopt/linalg.hpp"

namespace fockopt {

class GammaBasis {
 public:
  explicit GammaBasis(FockSpacePtr space) : space_(std::move(space)) {
    const int n_modes = space_->modes();
    const int n_photons = space_->photons();
    if (n_modes < 2 || n_photons < 1)
      throw std::invalid_argument("GammaBasis needs at least 2 modes and 1 photon");
    const double dim = static_cast<double>(space_->dim());
    k_ = n_photons * (n_modes + n_photons) * dim / (2.0 * n_modes * (n_modes + 1));
    const double scale = 1.0 / std::sqrt(2.0 * k_);
    const double mean = static_cast<double>(n_photons) / n_modes;

    gammas_.reserve(static_cast<std::size_t>(n_modes * n_modes));
    for (int i = 0; i < n_modes; ++i)
      for (int j = 0; j < n_modes; ++j) {
        SparseOp g(space_->dim(), space_->dim());
        if (i == j) {
          for (Index s = 0; s < space_->dim(); ++s) {
            const double v = (space_->state(s)[i] - mean) * scale;
            if (v != 0.0) g.add(s, s, v);
          }
        } else {
          const SparseOp hop = ladder_generator(*space_, i, j);
          for (const auto& e : hop.entries()) g.add(e.row, e.col, e.value * scale);
        }
        gammas_.push_back(std::move(g));
      }

    lower_space_ = std::make_shared<const FockSpace>(n_modes, n_photons - 1);
    for (int j = 0; j < n_modes; ++j) annihilators_.push_back(annihilator(*space_, *lower_space_, j));

    for (int i = 0; i < n_modes; ++i)
      for (int j = i; j < n_modes; ++j) upper_.emplace_back(i, j);
  }

  const FockSpacePtr& space() const { return space_; }
  int modes() const { return space_->modes(); }
  int photons() const { return space_->photons(); }
  Index dim() const { return space_->dim(); }
  Index count() const { return static_cast<Index>(gammas_.size()); }
  /// K of the normalization gamma = (...)/sqrt(2K).
  double k() const { return k_; }
  /// sum_ij gamma^{ij} gamma^{ji} = casimir() * 1.
  double casimir() const { return (count() - 1.0) / static_cast<double>(dim()); }

  Index flat_index(int i, int j) const { return static_cast<Index>(i) * modes() + j; }
  const SparseOp& gamma(int i, int j) const { return gammas_[static_cast<std::size_t>(flat_index(i, j))]; }
  const SparseOp& gamma(Index flat) const { return gammas_[static_cast<std::size_t>(flat)]; }

  /// Pairs (i, j) with i <= j; the conjugate pairs follow from gamma^{ji} = (gamma^{ij})^T.
  const std::vector<std::pair<int, int>>& upper_pairs() const { return upper_; }
  static double pair_weight(const std::pair<int, int>& p) { return p.first == p.second ? 1.0 : 2.0; }

  const std::vector<SparseOp>& annihilators() const { return annihilators_; }

 private:
  FockSpacePtr space_;
  FockSpacePtr lower_space_;
  double k_ = 0.0;
  std::vector<SparseOp> gammas_;
  std::vector<SparseOp> annihilators_;
  std::vector<std::pair<int, int>> upper_;
};

inline GammaBasis build_gamma(const FockSpacePtr& space) { return GammaBasis(space); }

/// gbar^{ij} = U^H gamma^{ij} U for all (i, j), plus derived overlaps.
struct RotatedFrame {
  Index dim = 0;
  int modes = 0;
  /// dim^2 x N^2; column flat_index(i,j) holds vec(gbar^{ij}) (column-major).
  CMatrix rotated;
  /// N^2 x N^2; (ij, nm) -> Tr[gamma^{ij} gbar^{nm}].
  CMatrix overlaps;
  /// dim^2 x |upper pairs|; column p holds vec(Pbar gamma^{ij}) for the p-th pair.
  /// Empty unless requested.
  CMatrix projected;
  /// Optical residual. Evaluated from `projected` when available, which avoids
  /// the cancellation in 1 - sum|overlap|^2 near feasibility.
  double residual = 1.0;

  Eigen::Map<const CMatrix> rotated_gamma(Index flat) const { return {rotated.col(flat).data(), dim, dim}; }
  Eigen::Map<const CMatrix> projected_gamma(Index pair) const { return {projected.col(pair).data(), dim, dim}; }
  bool has_projection() const { return projected.cols() > 0; }

  /// Pbar(Y) = sum_k gbar_k <gbar_k, Y>, applied column-wise to vec'd matrices.
  CMatrix project(const CMatrix& vecs) const { return rotated * (rotated.adjoint() * vecs); }
};

namespace detail {

inline CMatrix vec(const CMatrix& m) { return Eigen::Map<const CMatrix>(m.data(), m.size(), 1); }

inline double residual_from_projection(const GammaBasis& gb, const RotatedFrame& frame) {
  double total = 0.0;
  const auto& pairs = gb.upper_pairs();
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    CMatrix diff = -frame.projected_gamma(static_cast<Index>(p));
    for (const auto& e : gb.gamma(pairs[p].first, pairs[p].second).entries()) diff(e.row, e.col) += e.value;
    total += GammaBasis::pair_weight(pairs[p]) * diff.squaredNorm();
  }
  return total / (gb.count() - 1.0);
}

}  // namespace detail

/// Builds gbar^{ij} = ((a_i U)^H (a_j U) - (n/N) delta_ij) / sqrt(2K).
inline RotatedFrame rotate(const CMatrix& u, const GammaBasis& gb, bool with_projection = true) {
  const Index dim = gb.dim();
  const int n_modes = gb.modes();
  if (u.rows() != dim || u.cols() != dim) throw std::invalid_argument("rotate: U has the wrong shape");
  RotatedFrame frame;
  frame.dim = dim;
  frame.modes = n_modes;
  frame.rotated.resize(dim * dim, gb.count());

  std::vector<CMatrix> lowered;
  lowered.reserve(static_cast<std::size_t>(n_modes));
  for (const auto& a : gb.annihilators()) lowered.push_back(a.left_multiply(u));

  const double scale = 1.0 / std::sqrt(2.0 * gb.k());
  const double mean = static_cast<double>(gb.photons()) / n_modes;
  for (int i = 0; i < n_modes; ++i)
    for (int j = i; j < n_modes; ++j) {
      Eigen::Map<CMatrix> gij(frame.rotated.col(gb.flat_index(i, j)).data(), dim, dim);
      gij.noalias() = lowered[static_cast<std::size_t>(i)].adjoint() * lowered[static_cast<std::size_t>(j)];
      if (i == j) gij.diagonal().array() -= mean;
      gij *= scale;
      if (i != j) {
        Eigen::Map<CMatrix> gji(frame.rotated.col(gb.flat_index(j, i)).data(), dim, dim);
        gji = gij.adjoint();
      }
    }

  frame.overlaps.resize(gb.count(), gb.count());
  for (Index a = 0; a < gb.count(); ++a) {
    const SparseOp& g = gb.gamma(a);
    for (Index b = 0; b < gb.count(); ++b) frame.overlaps(a, b) = g.trace_product(frame.rotated_gamma(b));
  }
  frame.residual = 1.0 - frame.overlaps.squaredNorm() / (gb.count() - 1.0);

  if (with_projection) {
    // <gbar^{nm}, gamma^{ij}> = Tr[gbar^{mn} gamma^{ij}] = overlaps(ij, mn)
    const auto& pairs = gb.upper_pairs();
    CMatrix coeff(gb.count(), static_cast<Index>(pairs.size()));
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const Index ij = gb.flat_index(pairs[p].first, pairs[p].second);
      for (int n = 0; n < n_modes; ++n)
        for (int m = 0; m < n_modes; ++m) coeff(gb.flat_index(n, m), static_cast<Index>(p)) = frame.overlaps(ij, gb.flat_index(m, n));
    }
    frame.projected.noalias() = frame.rotated * coeff;
    frame.residual = detail::residual_from_projection(gb, frame);
  }
  return frame;
}

struct OpticalResidual {
  double residual;
  CMatrix overlaps;
};

inline OpticalResidual optical_residual(const CMatrix& u, const GammaBasis& gb) {
  RotatedFrame frame = rotate(u, gb, true);
  return {frame.residual, std::move(frame.overlaps)};
}

/// N^2 x N^2 matrix G^{(nm),(ij)} = Tr[gamma^{ij} gbar^{mn}] + delta^{nm} delta^{ij} / N.
/// Unitary at realizable U, where it equals S_ni conj(S_mj).
inline CMatrix overlap_unitary(const RotatedFrame& frame, const GammaBasis& gb) {
  const int n_modes = gb.modes();
  CMatrix g(gb.count(), gb.count());
  for (int n = 0; n < n_modes; ++n)
    for (int m = 0; m < n_modes; ++m)
      for (int i = 0; i < n_modes; ++i)
        for (int j = 0; j < n_modes; ++j) {
          cplx v = frame.overlaps(gb.flat_index(i, j), gb.flat_index(m, n));
          if (n == m && i == j) v += 1.0 / n_modes;
          g(gb.flat_index(n, m), gb.flat_index(i, j)) = v;
        }
  return g;
}

/// Optical residuals R^{nm} = (1 - P) gbar^{nm}, P the projector onto the bare
/// span. sum_nm ||R^{nm}||_F^2 = (N^2 - 1) * R.
inline std::vector<CMatrix> residual_vector(const CMatrix& u, const GammaBasis& gb) {
  const RotatedFrame frame = rotate(u, gb, false);
  std::vector<CMatrix> out;
  out.reserve(static_cast<std::size_t>(gb.count()));
  const int n_modes = gb.modes();
  for (Index nm = 0; nm < gb.count(); ++nm) {
    CMatrix r = frame.rotated_gamma(nm);
    // <gamma^{ij}, gbar^{nm}> = Tr[gamma^{ji} gbar^{nm}]
    for (int i = 0; i < n_modes; ++i)
      for (int j = 0; j < n_modes; ++j) {
        const cplx c = frame.overlaps(gb.flat_index(j, i), nm);
        for (const auto& e : gb.gamma(i, j).entries()) r(e.row, e.col) -= c * e.value;
      }
    out.push_back(std::move(r));
  }
  return out;
}

inline double residual_vector_normalization(const GammaBasis& gb) { return gb.count() - 1.0; }

/// Gradient of R with respect to X at X = 0 for U -> U e^{iX}:
/// dR = <grad, X> = Re Tr(grad X).
inline CMatrix residual_gradient(const RotatedFrame& frame, const GammaBasis& gb) {
  if (!frame.has_projection()) throw std::logic_error("residual_gradient needs a frame with projections");
  const Index dim = gb.dim();
  CMatrix acc = CMatrix::Zero(dim, dim);
  const auto& pairs = gb.upper_pairs();
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    const auto proj = frame.projected_gamma(static_cast<Index>(p));
    const SparseOp& gji = gb.gamma(j, i);
    CMatrix comm = gji.right_multiply(proj) - gji.left_multiply(proj);
    acc += GammaBasis::pair_weight(pairs[p]) * comm;
  }
  // grad f = Herm(i sum [Pbar gamma^{ij}, gamma^{ji}]), f = (N^2-1) R / 2
  return hermitian_part(kI * acc) * (2.0 / (gb.count() - 1.0));
}

/// Gauss-Newton operator of the optical residuals applied to Hermitian X:
///
///   ((N^2-1)/dim) X - gamma^{ij} X gamma^{ji}
///     - 1/2 sum (Tr([gbar^{nm}, gamma^{ij}] X))^* [gbar^{nm}, gamma^{ij}]
///
/// The commutator sum is evaluated as sum_ij [Pbar([X, gamma^{ij}]), gamma^{ji}]
/// over i <= j (weight 2 off the diagonal), which needs two dense products with
/// the rotated frame instead of materializing every commutator. This operator is
/// half the Hessian of (N^2-1) R / 2 in the Gauss-Newton approximation.
inline CMatrix gauss_newton_apply(const RotatedFrame& frame, const GammaBasis& gb, const CMatrix& x) {
  const Index dim = gb.dim();
  CMatrix out = gb.casimir() * x;
  for (Index a = 0; a < gb.count(); ++a) {
    const int i = static_cast<int>(a / gb.modes());
    const int j = static_cast<int>(a % gb.modes());
    out -= gb.gamma(j, i).right_multiply(gb.gamma(i, j).left_multiply(x));
  }

  const auto& pairs = gb.upper_pairs();
  CMatrix commutators(dim * dim, static_cast<Index>(pairs.size()));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const SparseOp& g = gb.gamma(pairs[p].first, pairs[p].second);
    Eigen::Map<CMatrix> c(commutators.col(static_cast<Index>(p)).data(), dim, dim);
    c = g.right_multiply(x) - g.left_multiply(x);
  }
  const CMatrix projected = frame.project(commutators);
  CMatrix acc = CMatrix::Zero(dim, dim);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    Eigen::Map<const CMatrix> y(projected.col(static_cast<Index>(p)).data(), dim, dim);
    const SparseOp& gji = gb.gamma(j, i);
    acc += GammaBasis::pair_weight(pairs[p]) * (gji.right_multiply(y) - gji.left_multiply(y));
  }
  out -= 0.5 * hermitian_part(acc);
  return hermitian_part(out);
}

class FeasibilityError : public std::runtime_error {
 public:
  enum class Kind { kInfeasibleInput, kExtractionFailed };
  FeasibilityError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct ExtractedScattering {
  ScatteringMatrix s;
  /// True when the phase was fixed on S_00; false when S_00 vanished and the
  /// first nonzero entry (column-major) was used.
  bool phase_fixed_on_first;
  double lift_mismatch;
};

/// Recovers S from G^{(nm),(ij)} = S_ni conj(S_mj): G reshaped over twin
/// indices is vec(S) vec(S)^H, so its dominant eigenvector is vec(S) up to phase.
inline ExtractedScattering extract_scattering(const CMatrix& u, const GammaBasis& gb) {
  constexpr double kMaxResidual = 1e-8;
  constexpr double kRankOneTolerance = 1e-6;
  constexpr double kLiftTolerance = 1e-6;
  const RotatedFrame frame = rotate(u, gb, true);
  if (!(frame.residual <= kMaxResidual))
    throw FeasibilityError(FeasibilityError::Kind::kInfeasibleInput,
                           "optical residual " + std::to_string(frame.residual) + " is above 1e-8");
  const int n_modes = gb.modes();
  const CMatrix g = overlap_unitary(frame, gb);
  // M_{(n,i),(m,j)} = G^{(nm),(ij)}
  CMatrix twin(gb.count(), gb.count());
  for (int n = 0; n < n_modes; ++n)
    for (int i = 0; i < n_modes; ++i)
      for (int m = 0; m < n_modes; ++m)
        for (int j = 0; j < n_modes; ++j)
          twin(gb.flat_index(n, i), gb.flat_index(m, j)) = g(gb.flat_index(n, m), gb.flat_index(i, j));
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(hermitian_part(twin));
  const Index top = gb.count() - 1;
  const double lambda = eig.eigenvalues()(top);
  const CVector v = eig.eigenvectors().col(top);
  const double rank_one_error = (twin - lambda * v * v.adjoint()).norm() / twin.norm();
  if (!(rank_one_error <= kRankOneTolerance))
    throw FeasibilityError(FeasibilityError::Kind::kExtractionFailed,
                           "overlap matrix is not rank one (relative error " + std::to_string(rank_one_error) + ")");

  CMatrix s(n_modes, n_modes);
  for (int n = 0; n < n_modes; ++n)
    for (int i = 0; i < n_modes; ++i) s(n, i) = std::sqrt(lambda) * v(gb.flat_index(n, i));
  for (int c = 0; c < n_modes; ++c) s.col(c).normalize();

  bool on_first = true;
  cplx pivot = s(0, 0);
  if (std::abs(pivot) < 1e-8) {
    on_first = false;
    for (Index k = 0; k < s.size(); ++k)
      if (std::abs(s.data()[k]) >= 1e-8) {
        pivot = s.data()[k];
        break;
      }
  }
  s *= std::conj(pivot) / std::abs(pivot);
  s = polar_unitary(s);

  ScatteringMatrix sm(s);
  const FockUnitary lifted = lift_unitary(sm, gb.space());
  const double mismatch = phase_aligned_distance(u, lifted.matrix);
  // U sits O(sqrt R) away from the realizable set
  if (!(mismatch <= kLiftTolerance + 10.0 * std::sqrt(std::max(frame.residual, 0.0))))
    throw FeasibilityError(FeasibilityError::Kind::kExtractionFailed,
                           "lift of the extracted S differs from U by " + std::to_string(mismatch));
  return {std::move(sm), on_first, mismatch};
}

}  // namespace fockopt
