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

#include "fockopt/herald.hpp"

#include <set>

#include "gtest/gtest.h"

using namespace fockopt;

namespace {

HeraldingProblem toy_problem() {
  return HeraldingProblem(4, 3, parse_occupation("1110"), parse_occupation("1"), {{parse_occupation("011"), 1.0}});
}

HeraldingProblem bell_problem() {
  const double r = 1.0 / std::sqrt(2.0);
  return HeraldingProblem(5, 4, parse_occupation("11110"), parse_occupation("2"),
                          {{parse_occupation("1010"), r}, {parse_occupation("0101"), r}});
}

// First column block of a random Hermitian matrix, made admissible.
CVector random_admissible(const FidelityFrame& frame, Index rest, Rng& rng) {
  return frame.admissible(random_gaussian_vector(rest, rng));
}

CMatrix embed_first_column(const CVector& t) {
  const Index dim = t.size() + 1;
  CMatrix h = CMatrix::Zero(dim, dim);
  h.col(0).tail(t.size()) = t;
  h.row(0).tail(t.size()) = t.adjoint();
  return h;
}

}  // namespace

TEST(heralding_problem, index_map) {
  const auto prob = bell_problem();
  ASSERT_EQ(prob.output_dim(), 10);
  ASSERT_EQ(prob.dim(), 70);
  ASSERT_EQ(to_string(prob.space()->state(0)), "11110");
  std::set<Index> seen(prob.mu().begin(), prob.mu().end());
  ASSERT_EQ(seen.size(), prob.mu().size());
  for (std::size_t a = 0; a < prob.mu().size(); ++a) {
    const Occupation& full = prob.space()->state(prob.mu()[a]);
    ASSERT_EQ(full.back(), 2);
    ASSERT_EQ(Occupation(full.begin(), full.end() - 1), prob.outputs()[a]);
  }
  ASSERT_NEAR(prob.target().norm(), 1.0, 1e-14);
}

TEST(heralding_problem, rejects_inconsistent_inputs) {
  ASSERT_THROW(HeraldingProblem(4, 3, parse_occupation("111"), parse_occupation("1"), {{parse_occupation("011"), 1.0}}),
               std::invalid_argument);
  ASSERT_THROW(HeraldingProblem(4, 3, parse_occupation("1110"), parse_occupation("4"), {{parse_occupation("011"), 1.0}}),
               std::invalid_argument);
  ASSERT_THROW(HeraldingProblem(4, 3, parse_occupation("1110"), parse_occupation("1"), {{parse_occupation("0111"), 1.0}}),
               std::invalid_argument);
  ASSERT_THROW(HeraldingProblem(4, 3, parse_occupation("1110"), parse_occupation("1"), {{parse_occupation("011"), 0.0}}),
               std::invalid_argument);
}

TEST(fidelity, identity_is_degenerate_feasible_point) {
  const auto prob = toy_problem();
  const CMatrix u = CMatrix::Identity(prob.dim(), prob.dim());
  ASSERT_EQ(fidelity_residual(u, prob).norm(), 0.0);
  ASSERT_EQ(std::abs(success_amplitude(u, prob).z), 0.0);
  const auto diag = fidelity_diagnostic(u, prob);
  ASSERT_EQ(diag.fidelity, 1.0);
  ASSERT_EQ(diag.probability, 0.0);
}

TEST(fidelity, haar_unitary_violates_constraint) {
  const auto prob = bell_problem();
  Rng rng(1);
  const CMatrix u = haar_unitary(prob.dim(), rng);
  const CVector r = fidelity_residual(u, prob);
  ASSERT_GT(r.norm(), 1e-3);
  // direct evaluation
  CVector c(prob.output_dim());
  for (Index a = 0; a < prob.output_dim(); ++a) c(a) = u(prob.mu()[static_cast<std::size_t>(a)], 0);
  const cplx overlap = (prob.target().conjugate().cwiseProduct(c)).sum();
  ASSERT_LT((r - (c - overlap * prob.target())).norm(), 1e-14);
  ASSERT_TRUE(success_amplitude(u, prob).approximate);
  const auto diag = fidelity_diagnostic(u, prob);
  ASSERT_NEAR(diag.probability, c.squaredNorm(), 1e-14);
  ASSERT_NEAR(diag.fidelity, std::norm(overlap) / c.squaredNorm(), 1e-14);
}

TEST(fidelity, orthogonal_column_has_zero_fidelity) {
  const auto prob = bell_problem();
  const double r = 1.0 / std::sqrt(2.0);
  CVector col = CVector::Zero(prob.dim());
  col(prob.space()->index_of(parse_occupation("10102"))) = r;
  col(prob.space()->index_of(parse_occupation("01012"))) = -r;
  Rng rng(3);
  CMatrix frame = haar_unitary(prob.dim(), rng);
  frame.col(0) = col;
  CMatrix u = reorthonormalize(frame);
  u.col(0) = col;
  const auto diag = fidelity_diagnostic(u, prob);
  ASSERT_NEAR(diag.probability, 1.0, 1e-12);
  ASSERT_LT(diag.fidelity, 1e-24);
}

TEST(initial_feasible_unitary, satisfies_constraints) {
  const auto prob = bell_problem();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const FockUnitary u = initial_feasible_unitary(prob, seed);
    ASSERT_LT(fidelity_residual(u.matrix, prob).norm(), 1e-13);
    ASSERT_LT(u.unitarity_defect(), 1e-12);
    const auto z = success_amplitude(u.matrix, prob);
    ASSERT_FALSE(z.approximate);
    ASSERT_GT(std::abs(z.z), 0.1);
    ASSERT_LT(std::abs(z.z), 0.9);
    ASSERT_NEAR(fidelity_diagnostic(u.matrix, prob).fidelity, 1.0, 1e-12);
  }
  const CMatrix u0 = initial_feasible_unitary(prob, 1).matrix;
  const CMatrix u1 = initial_feasible_unitary(prob, 2).matrix;
  ASSERT_GT(max_abs(u0 - u1), 1e-3);
}

TEST(fidelity_frame, defining_properties) {
  const auto prob = bell_problem();
  const CMatrix u = initial_feasible_unitary(prob, 5).matrix;
  const FidelityFrame frame = build_frame(u, prob);
  const Index rest = prob.dim() - 1;
  ASSERT_LE(frame.v_dim(), prob.output_dim());

  // U_{mu,n} h_n is proportional to a
  CVector uh(prob.output_dim());
  for (Index a = 0; a < prob.output_dim(); ++a)
    uh(a) = (u.row(prob.mu()[static_cast<std::size_t>(a)]).tail(rest) * frame.h)(0);
  const cplx coeff = prob.target().dot(uh);
  ASSERT_LT((uh - coeff * prob.target()).norm(), 1e-10);

  // P_u is a Hermitian idempotent annihilating every e^(alpha)
  const CMatrix pu = frame.pu_dense();
  ASSERT_LT(max_abs(pu * pu - pu), 1e-10);
  ASSERT_LT(max_abs(pu - pu.adjoint()), 1e-12);
  for (Index a = 0; a < prob.output_dim(); ++a) {
    const CVector e = u.row(prob.mu()[static_cast<std::size_t>(a)]).tail(rest).adjoint();
    ASSERT_LT((pu * e).norm(), 1e-10);
  }
  Rng rng(8);
  const CVector q = random_gaussian_vector(rest, rng);
  for (Index a = 0; a < prob.output_dim(); ++a)
    ASSERT_LT(std::abs((u.row(prob.mu()[static_cast<std::size_t>(a)]).tail(rest) * frame.project_out_v(q))(0)), 1e-10);
}

TEST(project_tangent, projector_algebra) {
  const auto prob = toy_problem();
  const CMatrix u = initial_feasible_unitary(prob, 3).matrix;
  const FidelityFrame frame = build_frame(u, prob);
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const CMatrix x = random_hermitian(prob.dim(), rng);
    const CMatrix y = random_hermitian(prob.dim(), rng);
    const CMatrix px = project_tangent(frame, x);
    ASSERT_LT(max_abs(px - px.adjoint()), 1e-15);
    ASSERT_LT(max_abs(project_tangent(frame, px) - px), 1e-12);
    ASSERT_NEAR(frob_inner(y, px), frob_inner(project_tangent(frame, y), x), 1e-12);
  }
}

TEST(project_tangent, kills_v_components_off_h) {
  const auto prob = bell_problem();
  const CMatrix u = initial_feasible_unitary(prob, 6).matrix;
  const FidelityFrame frame = build_frame(u, prob);
  ASSERT_GT(frame.v_dim(), 1);
  // a direction inside V orthogonal to h
  CVector t = frame.v_basis.col(0);
  t -= frame.h * (frame.h.dot(t) / frame.h.squaredNorm());
  const CMatrix out = project_tangent(frame, embed_first_column(t));
  ASSERT_LT(first_column_block(out).norm(), 1e-12);

  const CMatrix kept = project_tangent(frame, embed_first_column(frame.h));
  ASSERT_LT((first_column_block(kept) - frame.h).norm(), 1e-12);
}

TEST(apply_update, identity_update) {
  const auto prob = toy_problem();
  const CMatrix u = initial_feasible_unitary(prob, 2).matrix;
  const CMatrix out = apply_update(u, CVector::Zero(prob.dim() - 1), 0.0, OmegaFactor{});
  ASSERT_EQ(max_abs(out - u), 0.0);
}

TEST(apply_update, closed_form_rotation_matches_dense_exponential) {
  const auto prob = toy_problem();
  const CMatrix u = initial_feasible_unitary(prob, 2).matrix;
  Rng rng(9);
  const CVector t = random_gaussian_vector(prob.dim() - 1, rng);
  const CMatrix h = embed_first_column(t);
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(h);
  const CMatrix expo = eig.eigenvectors() * (kI * eig.eigenvalues().cast<cplx>()).array().exp().matrix().asDiagonal() *
                       eig.eigenvectors().adjoint();
  ASSERT_LT(max_abs(rotate_first_column(u, t) - u * expo), 1e-12);
}

TEST(apply_update, cayley_variants_match) {
  Rng rng(12);
  const CMatrix omega = random_hermitian(30, rng);
  const OmegaFactor exact = cayley_exact(omega);
  const CMatrix eye = CMatrix::Identity(30, 30);
  const CMatrix expected = (eye - 0.5 * kI * omega).inverse() * (eye + 0.5 * kI * omega);
  ASSERT_LT(max_abs(exact.dense - expected), 1e-12);
  ASSERT_LT(unitarity_defect(exact.dense), 1e-12);

  // rank-limited omega is represented exactly by a large enough Krylov space
  const CMatrix thin = random_gaussian_matrix(30, 3, rng);
  const CMatrix low = thin * thin.adjoint();
  const OmegaFactor approx = cayley_lowrank(low, 6);
  ASSERT_LT(approx.truncation, 1e-10);
  const CMatrix dense = eye + approx.q * approx.core * approx.q.adjoint();
  const CMatrix low_expected = (eye - 0.5 * kI * low).inverse() * (eye + 0.5 * kI * low);
  ASSERT_LT(max_abs(dense - low_expected), 1e-10);
  ASSERT_LT(unitarity_defect(dense), 1e-12);
  ASSERT_GT(cayley_lowrank(omega, 4).truncation, 1e-3);
}

TEST(apply_update, preserves_constraints_over_many_steps) {
  const auto prob = bell_problem();
  CMatrix u = initial_feasible_unitary(prob, 17).matrix;
  Rng rng(18);
  const Index rest = prob.dim() - 1;
  double worst = 0.0;
  for (int step = 0; step < 100; ++step) {
    const FidelityFrame frame = build_frame(u, prob);
    const CVector t = 0.3 * random_admissible(frame, rest, rng);
    const double phi = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    const CMatrix omega = 0.2 * random_hermitian(rest, rng);
    const OmegaFactor f = (step % 2) ? cayley_exact(omega) : cayley_lowrank(omega, 8);
    u = apply_update(u, t, phi, f);
    worst = std::max(worst, fidelity_residual(u, prob).norm());
  }
  ASSERT_LT(worst, 1e-11);
  ASSERT_LT(unitarity_defect(u), 1e-10);
}

TEST(apply_update, finite_symmetry_step) {
  const auto prob = bell_problem();
  const CMatrix u = initial_feasible_unitary(prob, 21).matrix;
  const FidelityFrame frame = build_frame(u, prob);
  Rng rng(22);
  const CVector q = frame.project_out_v(random_gaussian_vector(prob.dim() - 1, rng));
  const CVector t = 0.5 * frame.h / frame.h.norm() + q / q.norm();
  ASSERT_LT(fidelity_residual(apply_update(u, t, 0.0, OmegaFactor{}), prob).norm(), 1e-12);
}

// Along t = xi h the amplitude moves as z' = z + xi (z/|z|)(1 - |z|^2).
TEST(apply_update, amplitude_derivative_along_h) {
  const auto prob = bell_problem();
  const CMatrix u = initial_feasible_unitary(prob, 30).matrix;
  const FidelityFrame frame = build_frame(u, prob);
  const cplx z = frame.z;
  const double step = 1e-5;
  const cplx zp = success_amplitude(apply_update(u, step * frame.h, 0.0, OmegaFactor{}), prob).z;
  const cplx zm = success_amplitude(apply_update(u, -step * frame.h, 0.0, OmegaFactor{}), prob).z;
  const cplx derivative = (zp - zm) / (2.0 * step);
  const cplx expected = z / std::abs(z) * (1.0 - std::norm(z));
  ASSERT_LT(std::abs(derivative - expected), 1e-6);
  // the magnitude grows at rate (1 - |z|^2)
  const double rate = (std::abs(zp) - std::abs(zm)) / (2.0 * step);
  ASSERT_NEAR(rate, 1.0 - std::norm(z), 1e-6);
}
