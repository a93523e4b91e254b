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

#include "fockopt/fock.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "gtest/gtest.h"

#include "fockopt/matrix_io.hpp"

using namespace fockopt;

namespace {

// Permanent as the plain sum over permutations.
cplx brute_permanent(const CMatrix& a) {
  std::vector<int> p(static_cast<std::size_t>(a.rows()));
  std::iota(p.begin(), p.end(), 0);
  cplx total = 0.0;
  do {
    cplx term = 1.0;
    for (Index r = 0; r < a.rows(); ++r) term *= a(r, p[static_cast<std::size_t>(r)]);
    total += term;
  } while (std::next_permutation(p.begin(), p.end()));
  return total;
}

CMatrix splitter() {
  CMatrix s(2, 2);
  s << 1, 1, 1, -1;
  return s / std::sqrt(2.0);
}

}  // namespace

TEST(fock_space, dimension_matches_binomial) {
  for (int n_modes = 1; n_modes <= 6; ++n_modes)
    for (int n_photons = 0; n_photons <= 6; ++n_photons) {
      FockSpace space(n_modes, n_photons);
      ASSERT_EQ(space.dim(), static_cast<Index>(binomial(n_modes + n_photons - 1, n_photons)));
      std::set<Occupation> seen;
      for (Index i = 0; i < space.dim(); ++i) {
        const Occupation& s = space.state(i);
        ASSERT_EQ(static_cast<int>(s.size()), n_modes);
        ASSERT_EQ(total_photons(s), n_photons);
        ASSERT_TRUE(std::all_of(s.begin(), s.end(), [](int c) { return c >= 0; }));
        ASSERT_TRUE(seen.insert(s).second);
        ASSERT_EQ(space.index_of(s), i);
      }
    }
}

TEST(fock_space, pinned_state_goes_first) {
  auto space = enumerate_basis(4, 3, parse_occupation("1110"));
  ASSERT_EQ(space->dim(), 20);
  ASSERT_EQ(to_string(space->state(0)), "1110");
  ASSERT_EQ(enumerate_basis(6, 4, parse_occupation("111100"))->dim(), 126);
}

TEST(fock_space, descending_order) {
  FockSpace space(2, 1);
  ASSERT_EQ(to_string(space.state(0)), "10");
  ASSERT_EQ(to_string(space.state(1)), "01");
  FockSpace three(3, 2);
  for (Index i = 1; i < three.dim(); ++i) ASSERT_TRUE(three.state(i - 1) > three.state(i));
}

TEST(fock_space, rejects_bad_hint) {
  ASSERT_THROW(FockSpace(4, 3, parse_occupation("111")), std::invalid_argument);
  ASSERT_THROW(FockSpace(4, 3, parse_occupation("1111")), std::invalid_argument);
  ASSERT_THROW(parse_occupation("1a0"), std::invalid_argument);
}

TEST(ladder_generator, small_cases) {
  FockSpace one(2, 1);
  CMatrix n0 = ladder_generator(one, 0, 0).dense();
  CMatrix expected(2, 2);
  expected << 1, 0, 0, 0;
  ASSERT_LT(max_abs(n0 - expected), 1e-15);

  CMatrix hop = ladder_generator(one, 0, 1).dense();
  expected << 0, 1, 0, 0;
  ASSERT_LT(max_abs(hop - expected), 1e-15);

  FockSpace two(2, 2);
  CMatrix h2 = ladder_generator(two, 0, 1).dense();
  const Index from = two.index_of({0, 2});
  const Index to = two.index_of({1, 1});
  ASSERT_NEAR(h2(to, from).real(), std::sqrt(2.0), 1e-15);
  ASSERT_THROW(ladder_generator(two, 0, 2), std::invalid_argument);
  ASSERT_THROW(ladder_generator(two, -1, 0), std::invalid_argument);
}

TEST(ladder_generator, sparse_products_match_dense) {
  FockSpace space(3, 3);
  Rng rng(7);
  CMatrix x = random_gaussian_matrix(space.dim(), space.dim(), rng);
  SparseOp op = ladder_generator(space, 2, 0);
  CMatrix d = op.dense();
  ASSERT_LT(max_abs(op.left_multiply(x) - d * x), 1e-13);
  ASSERT_LT(max_abs(op.right_multiply(x) - x * d), 1e-13);
  ASSERT_LT(std::abs(op.trace_product(x) - (d * x).trace()), 1e-13);
}

TEST(permanent, definition_cases) {
  CMatrix one(1, 1);
  one << cplx(2.0, 3.0);
  ASSERT_LT(std::abs(permanent(one) - cplx(2.0, 3.0)), 1e-15);
  CMatrix two(2, 2);
  two << 1.0, 2.0, 3.0, 4.0;
  ASSERT_LT(std::abs(permanent(two) - cplx(10.0)), 1e-14);
  ASSERT_LT(std::abs(permanent(CMatrix::Ones(3, 3)) - cplx(6.0)), 1e-14);
  ASSERT_THROW(permanent(CMatrix::Ones(17, 17)), std::length_error);
}

TEST(permanent, matches_permutation_sum) {
  Rng rng(11);
  for (int k = 1; k <= 7; ++k) {
    CMatrix a = random_gaussian_matrix(k, k, rng);
    ASSERT_LT(std::abs(permanent(a) - brute_permanent(a)), 1e-11) << k;
  }
}

TEST(scattering_matrix, rejects_non_unitary) {
  ASSERT_NO_THROW(ScatteringMatrix{splitter()});
  ASSERT_THROW(ScatteringMatrix(CMatrix::Ones(2, 2)), std::invalid_argument);
  ASSERT_THROW(ScatteringMatrix(CMatrix(2, 3)), std::invalid_argument);
}

TEST(amplitude_oracle, splitter_cases) {
  const CMatrix s = splitter();
  ASSERT_LT(std::abs(amplitude_oracle(s, {1, 1}, {1, 1})), 1e-15);
  ASSERT_NEAR(std::abs(amplitude_oracle(s, {1, 1}, {2, 0})), 1.0 / std::sqrt(2.0), 1e-15);
  ASSERT_NEAR(std::abs(amplitude_oracle(CMatrix::Identity(3, 3), {1, 0, 2}, {1, 0, 2})), 1.0, 1e-15);
  ASSERT_THROW(amplitude_oracle(s, {1, 1}, {1, 0}), std::invalid_argument);
}

TEST(lift_unitary, identity_and_splitter) {
  auto space = enumerate_basis(3, 2);
  FockUnitary u = lift_unitary(ScatteringMatrix(CMatrix::Identity(3, 3)), space);
  ASSERT_LT(max_abs(u.matrix - CMatrix::Identity(space->dim(), space->dim())), 1e-12);

  auto pair = enumerate_basis(2, 2);
  FockUnitary bs = lift_unitary(ScatteringMatrix(splitter()), pair);
  const Index i11 = pair->index_of({1, 1});
  ASSERT_LT(std::abs(bs.matrix(i11, i11)), 1e-12);
  ASSERT_LT(bs.unitarity_defect(), 1e-10);
}

TEST(lift_unitary, matches_permanents) {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const int n_modes = 2 + trial % 3;
    const int n_photons = 1 + trial % 3;
    auto space = enumerate_basis(n_modes, n_photons);
    const CMatrix s = haar_unitary(n_modes, rng);
    const FockUnitary u = lift_unitary(ScatteringMatrix(s), space);
    CMatrix oracle(space->dim(), space->dim());
    for (Index r = 0; r < space->dim(); ++r)
      for (Index c = 0; c < space->dim(); ++c) {
        std::vector<Index> rows, cols;
        for (int m = 0; m < n_modes; ++m) {
          for (int k = 0; k < space->state(r)[m]; ++k) rows.push_back(m);
          for (int k = 0; k < space->state(c)[m]; ++k) cols.push_back(m);
        }
        CMatrix sub(n_photons, n_photons);
        for (int a = 0; a < n_photons; ++a)
          for (int b = 0; b < n_photons; ++b) sub(a, b) = s(rows[a], cols[b]);
        double norm = 1.0;
        for (int m = 0; m < n_modes; ++m) norm *= factorial(space->state(r)[m]) * factorial(space->state(c)[m]);
        oracle(r, c) = brute_permanent(sub) / std::sqrt(norm);
      }
    ASSERT_LT(max_abs(u.matrix - oracle), 1e-9) << "trial " << trial;
    ASSERT_LT(u.unitarity_defect(), 1e-10);
  }
}

TEST(lift_unitary, is_a_homomorphism) {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const int n_modes = 3 + trial % 2;
    auto space = enumerate_basis(n_modes, 1 + trial % 3);
    const CMatrix s1 = haar_unitary(n_modes, rng);
    const CMatrix s2 = haar_unitary(n_modes, rng);
    const CMatrix lhs = lift_unitary(ScatteringMatrix(s1 * s2), space).matrix;
    const CMatrix rhs = lift_unitary(ScatteringMatrix(s1), space).matrix * lift_unitary(ScatteringMatrix(s2), space).matrix;
    ASSERT_LT(phase_aligned_distance(lhs, rhs), 1e-8);
  }
}

TEST(lift_unitary, survives_branch_cut) {
  CMatrix s = CMatrix::Identity(3, 3);
  s(1, 1) = -1.0;
  auto space = enumerate_basis(3, 2);
  const CMatrix u = lift_unitary(ScatteringMatrix(s), space).matrix;
  ASSERT_LT(max_abs(u - lift_by_permanents(s, *space)), 1e-9);
}

TEST(matrix_io, round_trip_is_exact) {
  Rng rng(5);
  CMatrix m = random_gaussian_matrix(3, 4, rng);
  m(0, 0) = cplx(1.0 / 3.0, -1e-300);
  const CMatrix back = matrix_from_string(matrix_to_string(m));
  ASSERT_EQ(back.rows(), 3);
  ASSERT_EQ(back.cols(), 4);
  for (Index i = 0; i < m.size(); ++i) ASSERT_EQ(back.data()[i], m.data()[i]);
}

TEST(matrix_io, reports_bad_entries) {
  ASSERT_THROW(matrix_from_string("1 1\n1.0\n"), MatrixFormatError);
  ASSERT_THROW(matrix_from_string("1 2\n1,0\n"), MatrixFormatError);
  ASSERT_THROW(matrix_from_string("2 1\n1,0\n"), MatrixFormatError);
  ASSERT_THROW(matrix_from_string("x 1\n"), MatrixFormatError);
  ASSERT_THROW(matrix_from_string("1 1\nab,1\n"), MatrixFormatError);
}
