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

// Unit-fidelity heralding constraints on the first column of a Fock-space
// unitary U, and the constraint-preserving update U -> U e^{iH} g.
//
// Index conventions: the input state is basis state 0. Column vectors that
// live on "the rest of the basis" (h, t, q) have length dim-1 and entry k
// refers to basis state k+1.

#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "fockopt/fock.hpp"
#include "fockopt/linalg.hpp"

namespace fockopt {

struct TargetTerm {
  Occupation occupation;
  cplx amplitude;
};

/// Input state, measurement pattern on the last M modes, and the target
/// state on the first N-M modes.
class HeraldingProblem {
 public:
  HeraldingProblem(int modes, int photons, Occupation input, Occupation pattern, const std::vector<TargetTerm>& target)
      : input_(std::move(input)), pattern_(std::move(pattern)) {
    if (static_cast<int>(input_.size()) != modes)
      throw std::invalid_argument("input " + to_string(input_) + " has " + std::to_string(input_.size()) +
                                  " modes, expected " + std::to_string(modes));
    if (total_photons(input_) != photons)
      throw std::invalid_argument("input " + to_string(input_) + " holds " + std::to_string(total_photons(input_)) +
                                  " photons, expected " + std::to_string(photons));
    const int measured = static_cast<int>(pattern_.size());
    if (measured >= modes)
      throw std::invalid_argument("pattern " + to_string(pattern_) + " must cover fewer than " +
                                  std::to_string(modes) + " modes");
    const int heralded_photons = photons - total_photons(pattern_);
    if (heralded_photons < 0)
      throw std::invalid_argument("pattern " + to_string(pattern_) + " needs more photons than the input provides");

    space_ = enumerate_basis(modes, photons, input_);
    outputs_ = FockSpace(modes - measured, heralded_photons).basis();
    mu_.reserve(outputs_.size());
    for (const auto& k : outputs_) {
      Occupation full = k;
      full.insert(full.end(), pattern_.begin(), pattern_.end());
      mu_.push_back(space_->index_of(full));
    }

    target_ = CVector::Zero(static_cast<Index>(outputs_.size()));
    for (const auto& term : target) {
      if (static_cast<int>(term.occupation.size()) != modes - measured || total_photons(term.occupation) != heralded_photons)
        throw std::invalid_argument("target state " + to_string(term.occupation) + " must hold " +
                                    std::to_string(heralded_photons) + " photons in " +
                                    std::to_string(modes - measured) + " modes");
      auto it = std::find(outputs_.begin(), outputs_.end(), term.occupation);
      const auto alpha = static_cast<Index>(it - outputs_.begin());
      if (target_(alpha) != cplx(0.0)) throw std::invalid_argument("target state " + to_string(term.occupation) + " listed twice");
      target_(alpha) = term.amplitude;
    }
    input_target_norm_ = target_.norm();
    if (!(input_target_norm_ > 0.0)) throw std::invalid_argument("target amplitudes are all zero");
    target_ /= input_target_norm_;
  }

  const FockSpacePtr& space() const { return space_; }
  int modes() const { return space_->modes(); }
  int photons() const { return space_->photons(); }
  Index dim() const { return space_->dim(); }
  Index input_index() const { return 0; }
  const Occupation& input() const { return input_; }
  const Occupation& pattern() const { return pattern_; }
  int measured_modes() const { return static_cast<int>(pattern_.size()); }
  /// Heralded-mode occupations k, in the order used by mu() and target().
  const std::vector<Occupation>& outputs() const { return outputs_; }
  Index output_dim() const { return static_cast<Index>(outputs_.size()); }
  const std::vector<Index>& mu() const { return mu_; }
  const CVector& target() const { return target_; }
  /// Norm of the target amplitudes as supplied, before normalization.
  double supplied_target_norm() const { return input_target_norm_; }

  /// U_{mu_alpha, 0}
  CVector heralded_column(const CMatrix& u) const {
    CVector c(output_dim());
    for (Index a = 0; a < output_dim(); ++a) c(a) = u(mu_[static_cast<std::size_t>(a)], 0);
    return c;
  }

 private:
  Occupation input_;
  Occupation pattern_;
  FockSpacePtr space_;
  std::vector<Occupation> outputs_;
  std::vector<Index> mu_;
  CVector target_;
  double input_target_norm_ = 0.0;
};

/// (1 - a a^H) U_{mu,0}; vanishes exactly when heralding has unit fidelity.
inline CVector fidelity_residual(const CMatrix& u, const HeraldingProblem& prob) {
  if (u.rows() != prob.dim() || u.cols() != prob.dim()) throw std::invalid_argument("fidelity_residual: shape mismatch");
  const CVector c = prob.heralded_column(u);
  const CVector& a = prob.target();
  return c - a * a.dot(c);
}

struct SuccessAmplitude {
  cplx z;
  double probability;
  /// Set when the fidelity residual is not negligible and z is only the
  /// least-squares projection onto the target.
  bool approximate;
};

inline SuccessAmplitude success_amplitude(const CMatrix& u, const HeraldingProblem& prob) {
  constexpr double kExactTolerance = 1e-10;
  const cplx z = prob.target().dot(prob.heralded_column(u));
  return {z, std::norm(z), fidelity_residual(u, prob).norm() > kExactTolerance};
}

struct FidelityDiagnostic {
  double fidelity;
  double probability;
};

/// P = sum |U_{mu,0}|^2, F = |<a, U_{mu,0}>|^2 / P (F = 1 when P < 1e-30).
inline FidelityDiagnostic fidelity_diagnostic(const CMatrix& u, const HeraldingProblem& prob) {
  const CVector c = prob.heralded_column(u);
  const double p = c.squaredNorm();
  if (p < 1e-30) return {1.0, p};
  return {std::norm(prob.target().dot(c)) / p, p};
}

/// Local description of the fidelity constraint manifold at U.
struct FidelityFrame {
  cplx z;
  /// z/|z|, or 1 when z vanishes.
  cplx phase;
  /// h_n = -i phase a_alpha conj(U_{mu_alpha,n}), n >= 1.
  CVector h;
  /// Orthonormal basis of V = Span{e^(alpha)}, e^(alpha)_n = conj(U_{mu_alpha,n}).
  CMatrix v_basis;
  /// Set when the e^(alpha) are linearly dependent and V was reduced.
  bool rank_deficient = false;

  Index v_dim() const { return v_basis.cols(); }

  /// P_u q: orthogonal projection onto the complement of V.
  CVector project_out_v(const CVector& q) const { return q - v_basis * (v_basis.adjoint() * q); }

  CMatrix pu_dense() const {
    CMatrix p = CMatrix::Identity(h.size(), h.size());
    p -= v_basis * v_basis.adjoint();
    return p;
  }

  /// xi h + P_u t with xi = <h,t>/<h,h>: the admissible part of a first column.
  CVector admissible(const CVector& t) const {
    CVector out = project_out_v(t);
    const double hh = h.squaredNorm();
    if (hh > 1e-28) out += h * (h.dot(t) / hh);
    return out;
  }
};

inline FidelityFrame build_frame(const CMatrix& u, const HeraldingProblem& prob) {
  constexpr double kRankTolerance = 1e-8;
  const Index rest = prob.dim() - 1;
  FidelityFrame frame;
  frame.z = prob.target().dot(prob.heralded_column(u));
  frame.phase = std::abs(frame.z) > 0.0 ? frame.z / std::abs(frame.z) : cplx(1.0);

  CMatrix e(rest, prob.output_dim());
  for (Index a = 0; a < prob.output_dim(); ++a)
    e.col(a) = u.row(prob.mu()[static_cast<std::size_t>(a)]).tail(rest).adjoint();
  frame.h = -kI * frame.phase * (e * prob.target());

  Eigen::JacobiSVD<CMatrix> svd(e, Eigen::ComputeThinU);
  const RVector& sv = svd.singularValues();
  Index rank = 0;
  while (rank < sv.size() && sv(rank) > kRankTolerance) ++rank;
  frame.v_basis = svd.matrixU().leftCols(rank);
  frame.rank_deficient = rank < prob.output_dim();
  return frame;
}

/// The first-column block t of a Hermitian matrix (entries (n,0), n >= 1).
inline CVector first_column_block(const CMatrix& x) { return x.col(0).tail(x.rows() - 1); }

/// Orthogonal projection of a Hermitian X onto the tangent space of the
/// fidelity constraints. Only the first row/column off-diagonals change.
inline CMatrix project_tangent(const FidelityFrame& frame, const CMatrix& x) {
  const Index rest = x.rows() - 1;
  CMatrix out = x;
  const CVector t = frame.admissible(first_column_block(x));
  out.col(0).tail(rest) = t;
  out.row(0).tail(rest) = t.adjoint();
  return out;
}

inline CMatrix project_tangent(const CMatrix& u, const HeraldingProblem& prob, const CMatrix& x) {
  return project_tangent(build_frame(u, prob), x);
}

/// Unitary factor Omega acting on basis states 1..dim-1, either absent,
/// dense, or of the form 1 + Q C Q^H with orthonormal Q.
struct OmegaFactor {
  enum class Kind { kIdentity, kDense, kLowRank };
  Kind kind = Kind::kIdentity;
  CMatrix dense;
  CMatrix q;
  CMatrix core;
  /// ||omega - Q T Q^H||_F / ||omega||_F for the low-rank variant.
  double truncation = 0.0;

  Index rank() const { return kind == Kind::kLowRank ? q.cols() : (kind == Kind::kDense ? dense.rows() : 0); }
};

namespace detail {

inline CMatrix cayley_by_eigen(const CMatrix& omega) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(hermitian_part(omega));
  CVector f(eig.eigenvalues().size());
  for (Index k = 0; k < f.size(); ++k) {
    const double l = eig.eigenvalues()(k);
    f(k) = (cplx(1.0, l / 2)) / (cplx(1.0, -l / 2));
  }
  return eig.eigenvectors() * f.asDiagonal() * eig.eigenvectors().adjoint();
}

}  // namespace detail

/// Omega = (1 + i omega/2)(1 - i omega/2)^{-1} for Hermitian omega.
inline OmegaFactor cayley_exact(const CMatrix& omega) {
  OmegaFactor f;
  if (omega.size() == 0 || max_abs(omega) == 0.0) return f;
  const Index m = omega.rows();
  CMatrix a = CMatrix::Identity(m, m) - (kI * 0.5) * omega;
  CMatrix b = CMatrix::Identity(m, m) + (kI * 0.5) * omega;
  Eigen::PartialPivLU<CMatrix> lu(a);
  f.kind = OmegaFactor::Kind::kDense;
  if (lu.rcond() < 1e-13) {
    f.dense = detail::cayley_by_eigen(omega);
  } else {
    f.dense = lu.solve(b);
  }
  return f;
}

/// Cayley transform of the rank-r Lanczos approximation Q T Q^H of omega.
/// The result is exactly unitary; `truncation` reports how well Q T Q^H
/// represents omega.
inline OmegaFactor cayley_lowrank(const CMatrix& omega, Index rank) {
  OmegaFactor f;
  const Index m = omega.rows();
  const double norm = omega.norm();
  if (m == 0 || norm == 0.0) return f;
  if (rank >= m) {
    f = cayley_exact(omega);
    return f;
  }
  Rng rng(0x1a2c05);
  CVector start = omega * random_gaussian_vector(m, rng);
  if (start.norm() == 0.0) return f;
  CMatrix q(m, rank);
  q.col(0) = start.normalized();
  Index built = 1;
  for (; built < rank; ++built) {
    CVector w = omega * q.col(built - 1);
    for (int pass = 0; pass < 2; ++pass) w -= q.leftCols(built) * (q.leftCols(built).adjoint() * w);
    const double beta = w.norm();
    if (beta < 1e-13 * norm) break;
    q.col(built) = w / beta;
  }
  q.conservativeResize(m, built);
  const CMatrix wq = omega * q;
  const CMatrix t = hermitian_part(q.adjoint() * wq);
  const CMatrix eye = CMatrix::Identity(built, built);
  const CMatrix cay = (eye - (kI * 0.5) * t).partialPivLu().solve(eye + (kI * 0.5) * t);
  f.kind = OmegaFactor::Kind::kLowRank;
  f.q = q;
  f.core = cay - eye;
  f.truncation = (omega - q * t * q.adjoint()).norm() / norm;
  return f;
}

/// U e^{iH} for H = [[0, t^H], [t, 0]], using the closed form on the
/// two-dimensional invariant subspace Span{e_0, (0, t)}.
inline CMatrix rotate_first_column(const CMatrix& u, const CVector& t) {
  const double theta = t.norm();
  if (theta == 0.0) return u;
  const Index rest = u.cols() - 1;
  const CVector v = t / theta;
  const CVector u0 = u.col(0);
  const CVector w = u.rightCols(rest) * v;
  CMatrix out = u;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  out.col(0) = c * u0 + (kI * s) * w;
  const CVector left = (c - 1.0) * w + (kI * s) * u0;
  out.rightCols(rest).noalias() += left * v.adjoint();
  return out;
}

/// U' = U e^{iH} diag(e^{i phi}, Omega) with H built from the first-column
/// block t. Preserves the fidelity constraints whenever t is admissible.
inline CMatrix apply_update(const CMatrix& u, const CVector& t, double phi, const OmegaFactor& omega) {
  CMatrix out = rotate_first_column(u, t);
  if (phi != 0.0) out.col(0) *= std::exp(kI * phi);
  const Index rest = u.cols() - 1;
  switch (omega.kind) {
    case OmegaFactor::Kind::kIdentity:
      break;
    case OmegaFactor::Kind::kDense: {
      CMatrix right = out.rightCols(rest) * omega.dense;
      out.rightCols(rest) = right;
      break;
    }
    case OmegaFactor::Kind::kLowRank: {
      const CMatrix uq = out.rightCols(rest) * omega.q;
      out.rightCols(rest).noalias() += uq * (omega.core * omega.q.adjoint());
      break;
    }
  }
  return out;
}

/// Random unitary satisfying the fidelity constraints exactly: the first
/// column carries z0 a on the heralded states, z0 = rho e^{i theta} with
/// rho uniform in (0.1, 0.9), and Haar-random weight elsewhere.
inline FockUnitary initial_feasible_unitary(const HeraldingProblem& prob, std::uint64_t seed) {
  Rng rng(seed);
  const Index dim = prob.dim();
  std::vector<bool> heralded(static_cast<std::size_t>(dim), false);
  for (Index m : prob.mu()) heralded[static_cast<std::size_t>(m)] = true;
  const Index others = dim - prob.output_dim();

  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double rho = 0.1 + 0.8 * uniform(rng);
  const double angle = 2.0 * M_PI * uniform(rng);
  if (others == 0) rho = 1.0;
  const cplx z0 = std::polar(rho, angle);

  CVector column = CVector::Zero(dim);
  const CVector filler = random_gaussian_vector(others, rng);
  Index k = 0;
  for (Index i = 0; i < dim; ++i)
    if (!heralded[static_cast<std::size_t>(i)]) column(i) = filler(k++);
  if (others > 0) column *= std::sqrt(1.0 - rho * rho) / column.norm();
  for (Index a = 0; a < prob.output_dim(); ++a) column(prob.mu()[static_cast<std::size_t>(a)]) = z0 * prob.target()(a);

  CMatrix frame = haar_unitary(dim, rng);
  frame.col(0) = column;
  CMatrix u = reorthonormalize(frame);
  // QR keeps the direction of the first column; restore its exact values.
  u.col(0) = column;
  return FockUnitary{std::move(u), prob.space()};
}

}  // namespace fockopt
