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

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace fockopt {

using cplx = std::complex<double>;
using Index = Eigen::Index;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Rng = std::mt19937_64;

inline constexpr cplx kI{0.0, 1.0};

/// SplitMix64 finalizer; used to derive independent per-run seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline CVector random_gaussian_vector(Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CVector v(n);
  for (Index i = 0; i < n; ++i) v(i) = cplx(normal(rng), normal(rng));
  return v;
}

inline CMatrix random_gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = cplx(normal(rng), normal(rng));
  return m;
}

/// Haar-distributed unitary (QR of a Ginibre matrix with the phase fix).
inline CMatrix haar_unitary(Index n, Rng& rng) {
  CMatrix z = random_gaussian_matrix(n, n, rng);
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ();
  const CMatrix& r = qr.matrixQR();
  for (Index k = 0; k < n; ++k) {
    const double mag = std::abs(r(k, k));
    if (mag > 0.0) q.col(k) *= r(k, k) / mag;
  }
  return q;
}

inline CMatrix random_hermitian(Index n, Rng& rng) {
  CMatrix z = random_gaussian_matrix(n, n, rng);
  return (z + z.adjoint()) * 0.5;
}

inline CMatrix hermitian_part(const CMatrix& m) { return (m + m.adjoint()) * 0.5; }

/// Real Frobenius inner product Re Tr(X^H Y).
inline double frob_inner(const CMatrix& x, const CMatrix& y) {
  return (x.conjugate().cwiseProduct(y)).sum().real();
}

/// max |(U^H U - 1)_{ij}|
inline double unitarity_defect(const CMatrix& u) {
  CMatrix d = u.adjoint() * u;
  d.diagonal().array() -= 1.0;
  return d.cwiseAbs().maxCoeff();
}

inline double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// Re-orthonormalizes the columns of a nearly unitary matrix by Householder QR.
/// The first column keeps its direction, so constraints on it survive.
inline CMatrix reorthonormalize(const CMatrix& u) {
  Eigen::HouseholderQR<CMatrix> qr(u);
  CMatrix q = qr.householderQ();
  const CMatrix& r = qr.matrixQR();
  for (Index k = 0; k < u.cols(); ++k) {
    const double mag = std::abs(r(k, k));
    if (mag > 0.0) q.col(k) *= r(k, k) / mag;
  }
  return q;
}

/// Nearest unitary in Frobenius norm (polar factor).
inline CMatrix polar_unitary(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

/// Minimal difference max|A - e^{i chi} B| over the global phase chi.
inline double phase_aligned_distance(const CMatrix& a, const CMatrix& b) {
  const cplx overlap = (b.conjugate().cwiseProduct(a)).sum();
  const cplx phase = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : cplx(1.0);
  return max_abs(a - phase * b);
}

}  // namespace fockopt
