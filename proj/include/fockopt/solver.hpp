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

// Constrained optimizer over Fock-space unitaries.
//
// Every iterate satisfies the unit-fidelity constraints exactly. Each outer
// iteration combines
//   * a normal step H_N that reduces the optical residual R (Gauss-Newton,
//     solved by conjugate gradients on the fidelity tangent space), and
//   * a tangent step H_T inside Span{gbar} that raises the success
//     probability |z|^2 while keeping R fixed to first order,
// and line searches the merit R - eta |z|^2 along X = H_N + H_T.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fockopt/feasibility.hpp"
#include "fockopt/fock.hpp"
#include "fockopt/herald.hpp"
#include "fockopt/linalg.hpp"

namespace fockopt {

enum class RunStatus { kFeasibleOptimum, kInfeasibleStationary, kIterationLimit, kLineSearchFailure };

inline std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kFeasibleOptimum:
      return "feasible-optimum";
    case RunStatus::kInfeasibleStationary:
      return "infeasible-stationary";
    case RunStatus::kIterationLimit:
      return "iteration-limit";
    case RunStatus::kLineSearchFailure:
      return "line-search-failure";
  }
  return "unknown";
}

struct SolverConfig {
  double eps_r = 1e-12;
  double eps_t = 1e-6;
  double eta_initial = 1.0;
  double eta_min = 1e-8;
  int max_outer_iters = 500;
  /// CG relative tolerance min(cg_tol_cap, sqrt(R)), floored at cg_tol_floor_factor * R.
  double cg_tol_cap = 0.1;
  double cg_tol_floor_factor = 1e-4;
  /// Lower bound on the CG relative tolerance.
  double cg_tol_min = 1e-3;
  /// 0 selects 10 * dim.
  int cg_max_iters = 0;
  Index lanczos_initial_rank = 8;
  /// Relative truncation of the Lanczos model of omega above which the rank doubles.
  double lanczos_tolerance = 1e-3;
  double armijo = 1e-4;
  double shrink = 0.5;
  int max_line_search_trials = 30;
  /// Relative eigenvalue size below which a tangent direction counts as flat.
  double tangent_flat_tolerance = 1e-8;
  /// Largest upward model curvature accepted at a certified optimum.
  double tangent_curvature_tolerance = 1e-3;
  /// Floor of the adaptive tangent radius.
  double tangent_min_radius = 1e-3;
  /// Trust-region radius for the normal step: min(normal_cap, normal_scale * sqrt(R)).
  double normal_cap = 1.0;
  double normal_scale = 1e3;
  /// Cap on ||H_T||_F before the line search.
  double tangent_cap = 1.0;
  /// Rank threshold for the tangent-step constraint system.
  double tangent_rank_tolerance = 1e-8;
  int stationary_patience = 5;
  double stationary_step = 1e-12;
  std::uint64_t seed = 1;
  bool record_history = true;

  void validate(Index dim) const {
    if (!(eps_r > 0.0) || !(eps_t > 0.0)) throw std::invalid_argument("tolerances must be positive");
    if (eps_t * eps_t < 2.220446049250313e-16 * static_cast<double>(dim))
      throw std::invalid_argument("eps_T is too small for the problem size");
    if (max_outer_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
    if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("line-search shrink factor must lie in (0,1)");
    if (!(eta_initial > 0.0)) throw std::invalid_argument("eta must be positive");
  }
};

struct IterationRecord {
  int iteration = 0;
  double residual = 0.0;
  double probability = 0.0;
  double merit_before = 0.0;
  double merit_after = 0.0;
  double eta = 0.0;
  double tau = 0.0;
  double normal_norm = 0.0;
  double tangent_norm = 0.0;
  double fidelity_residual = 0.0;
  int cg_iterations = 0;
  Index lanczos_rank = 0;
  bool tangent_dropped = false;
};

struct RunResult {
  RunStatus status = RunStatus::kIterationLimit;
  double residual = 1.0;
  double probability = 0.0;
  cplx z = 0.0;
  int iterations = 0;
  CMatrix u;
  std::optional<ScatteringMatrix> s;
  std::string extraction_error;
  Index tangent_dof = 0;
  double tangent_norm = 0.0;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
  std::vector<IterationRecord> history;
};

struct NormalStep {
  CMatrix h;
  int iterations = 0;
  bool breakdown = false;
  /// CG stopped on the trust-region boundary ||H_N|| = normal_cap.
  bool capped = false;
  double relative_residual = 0.0;
};

struct TangentStep {
  CMatrix h;
  /// Dimension of the admissible alpha-space; -1 when the step was skipped.
  Index dof = -1;
  /// Norm of the ascent direction before scaling, i.e. of the model gradient;
  /// infinite while the model curves upward by more than the curvature
  /// tolerance.
  double raw_norm = 0.0;
  /// Gradient and Hessian of the quadratic |z|^2 model in null-space coordinates.
  RVector gradient;
  Eigen::MatrixXd hessian;
};

namespace detail {

inline int cg_limit(const SolverConfig& cfg, Index dim) {
  return cfg.cg_max_iters > 0 ? cfg.cg_max_iters : static_cast<int>(10 * dim);
}

/// Rate of change of |z|^2 along X: 2|z| Re<h, t_X>.
inline double probability_slope(const FidelityFrame& ff, const CMatrix& x) {
  return 2.0 * std::abs(ff.z) * ff.h.dot(first_column_block(x)).real();
}

/// Orthonormal basis of traceless Hermitian N x N matrices, as flat
/// coefficient columns (index i*N+j).
inline CMatrix traceless_hermitian_basis(int n) {
  CMatrix basis = CMatrix::Zero(static_cast<Index>(n) * n, static_cast<Index>(n) * n - 1);
  Index k = 0;
  const double r = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      basis(i * n + j, k) = r;
      basis(j * n + i, k) = r;
      ++k;
      basis(i * n + j, k) = cplx(0.0, r);
      basis(j * n + i, k) = cplx(0.0, -r);
      ++k;
    }
  for (int d = 1; d < n; ++d) {
    const double norm = 1.0 / std::sqrt(static_cast<double>(d) * (d + 1));
    for (int l = 0; l < d; ++l) basis(l * n + l, k) = norm;
    basis(d * n + d, k) = -d * norm;
    ++k;
  }
  return basis;
}

/// Restores the fidelity constraints and unitarity after rounding drift.
inline CMatrix repair_unitary(const CMatrix& u, const HeraldingProblem& prob) {
  CVector c = u.col(0);
  const CVector& a = prob.target();
  const cplx z = a.dot(prob.heralded_column(u));
  for (Index k = 0; k < prob.output_dim(); ++k) c(prob.mu()[static_cast<std::size_t>(k)]) = z * a(k);
  c.normalize();
  CMatrix out = u;
  out.col(0) = c;
  out = reorthonormalize(out);
  out.col(0) = c;
  return out;
}

}  // namespace detail

/// Gauss-Newton step for R restricted to the fidelity tangent space:
/// Pi GN Pi X = -(N^2-1)/4 Pi grad R, solved by CG from X = 0.
inline NormalStep normal_step(const RotatedFrame& frame, const FidelityFrame& ff, const GammaBasis& gb,
                              const CMatrix& grad, const SolverConfig& cfg) {
  const Index dim = gb.dim();
  NormalStep out;
  out.h = CMatrix::Zero(dim, dim);
  const CMatrix b = -0.25 * (gb.count() - 1.0) * project_tangent(ff, grad);
  const double b_norm = b.norm();
  if (b_norm == 0.0) return out;
  const double r_now = std::max(frame.residual, 0.0);
  const double tol =
      std::max({std::min(cfg.cg_tol_cap, std::sqrt(r_now)), cfg.cg_tol_floor_factor * r_now, cfg.cg_tol_min});
  const int limit = detail::cg_limit(cfg, dim);
  const double radius = std::min(cfg.normal_cap, cfg.normal_scale * std::sqrt(r_now));

  CMatrix x = CMatrix::Zero(dim, dim);
  CMatrix r = b;
  CMatrix p = r;
  double rr = r.squaredNorm();
  int it = 0;
  for (; it < limit; ++it) {
    if (std::sqrt(rr) <= tol * b_norm) break;
    const CMatrix ap = project_tangent(ff, gauss_newton_apply(frame, gb, p));
    const double pap = frob_inner(p, ap);
    if (!(pap > 1e-300)) {
      out.breakdown = true;
      break;
    }
    const double alpha = rr / pap;
    if ((x + alpha * p).norm() > radius) {
      // stop on the trust-region boundary
      const double pp = p.squaredNorm();
      const double xp = frob_inner(x, p);
      const double gap = radius * radius - x.squaredNorm();
      const double step = (-xp + std::sqrt(xp * xp + pp * std::max(gap, 0.0))) / pp;
      x += step * p;
      out.capped = true;
      ++it;
      break;
    }
    x += alpha * p;
    r -= alpha * ap;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  out.h = project_tangent(ff, hermitian_part(x));
  out.iterations = it;
  out.relative_residual = std::sqrt(rr) / b_norm;
  return out;
}

/// Ascent step for |z|^2 inside Span{gbar} subject to (1 - Pi) H_T = 0.
///
/// H_T = sum alpha_ij gbar^{ij} with alpha traceless Hermitian. The admissible
/// alphas form a null space on which |z|^2 is modelled to second order. When
/// the model is concave up to a small remainder the step is its modified
/// Newton step; otherwise it is a 1-D Newton step along the gradient.
inline TangentStep tangent_step(const CMatrix& u, const HeraldingProblem& prob, const RotatedFrame& frame,
                                const FidelityFrame& ff, const GammaBasis& gb, const SolverConfig& cfg) {
  const Index dim = gb.dim();
  TangentStep out;
  out.h = CMatrix::Zero(dim, dim);
  const int n_modes = gb.modes();
  const CMatrix basis = detail::traceless_hermitian_basis(n_modes);
  const Index k = basis.cols();
  // first-column blocks of the basis directions
  const CMatrix columns = frame.rotated.block(1, 0, dim - 1, gb.count()) * basis;

  // V minus the h line
  CMatrix w = ff.v_basis;
  const double h_norm = ff.h.norm();
  if (h_norm > 1e-14 && w.cols() > 0) {
    const CVector coords = w.adjoint() * (ff.h / h_norm);
    Eigen::HouseholderQR<CMatrix> qr(coords);
    const CMatrix q = qr.householderQ();
    w = w * q.rightCols(q.cols() - 1);
  }

  Eigen::MatrixXd constraint(2 * w.cols(), k);
  if (w.cols() > 0) {
    const CMatrix c = w.adjoint() * columns;
    constraint.topRows(w.cols()) = c.real();
    constraint.bottomRows(w.cols()) = c.imag();
  }
  Eigen::MatrixXd null_space;
  if (constraint.rows() == 0) {
    null_space = Eigen::MatrixXd::Identity(k, k);
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(constraint, Eigen::ComputeFullV);
    const RVector& sv = svd.singularValues();
    const double threshold = cfg.tangent_rank_tolerance * std::max(1.0, sv.size() ? sv(0) : 0.0);
    Index rank = 0;
    while (rank < sv.size() && sv(rank) > threshold) ++rank;
    null_space = svd.matrixV().rightCols(k - rank);
  }
  out.dof = null_space.cols();
  if (out.dof == 0) return out;

  const RVector slope = 2.0 * std::abs(ff.z) * (columns.adjoint() * ff.h).real();
  const RVector g = null_space.transpose() * slope;

  // |z|^2 along U e^{i D(a)} to second order in the null-space coordinates a.
  const Index d = out.dof;
  const CMatrix directions = frame.rotated * (basis * null_space.cast<cplx>());
  const CMatrix& a = prob.target();
  CMatrix rows(prob.output_dim(), dim);
  for (Index k = 0; k < prob.output_dim(); ++k)
    rows.row(k) = a(k) == 0.0 ? CVector::Zero(dim).transpose().eval() : (std::conj(a(k)) * u.row(prob.mu()[static_cast<std::size_t>(k)])).eval();
  const CVector weights = rows.colwise().sum().transpose();
  CMatrix d0(dim, d);
  for (Index c = 0; c < d; ++c) {
    const Eigen::Map<const CMatrix> m(directions.col(c).data(), dim, dim);
    d0.col(c) = 0.5 * (m.col(0) + m.row(0).adjoint());
  }
  CVector z1 = kI * (weights.transpose() * d0).transpose();
  // w^T D_k D_l e0 = (D_k^T w)^T (D_l e0)
  CMatrix left(dim, d);
  for (Index c = 0; c < d; ++c) {
    const Eigen::Map<const CMatrix> m(directions.col(c).data(), dim, dim);
    left.col(c) = 0.5 * (m.transpose() * weights + m.conjugate() * weights);
  }
  const CMatrix z2 = -0.25 * (left.transpose() * d0 + d0.transpose() * left);
  Eigen::MatrixXd hess = 2.0 * (z1.conjugate() * z1.transpose()).real() + 4.0 * (std::conj(ff.z) * z2).real();
  hess = 0.5 * (hess + hess.transpose()).eval();
  out.gradient = g;
  out.hessian = hess;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess);
  const RVector& lam = eig.eigenvalues();
  const Eigen::MatrixXd& vec = eig.eigenvectors();
  const RVector gc = vec.transpose() * g;
  const double flat = cfg.tangent_flat_tolerance * std::max(1.0, lam.cwiseAbs().maxCoeff());
  RVector step = RVector::Zero(d);
  RVector convex = RVector::Zero(d);
  for (Index i = 0; i < d; ++i) {
    if (lam(i) < -flat) step(i) = gc(i) / -lam(i);
    else if (lam(i) > flat) convex(i) = gc(i) / lam(i);
  }
  step += convex;
  const double gn = g.norm();
  out.raw_norm = lam(d - 1) <= cfg.tangent_curvature_tolerance ? gn : std::numeric_limits<double>::infinity();
  RVector alpha;
  if (convex.norm() <= cfg.eps_t && (gn > 0.0 || lam(d - 1) <= flat)) {
    // Newton step on the concave model
    alpha = vec * step;
  } else {
    // 1-D Newton along the gradient, or along the top curvature direction
    const RVector dir = gn > 0.0 ? RVector(g / gn) : RVector(vec.col(d - 1));
    const double curvature = dir.dot(hess * dir);
    const double newton = curvature < 0.0 ? gn / -curvature : std::numeric_limits<double>::infinity();
    alpha = std::min(newton, cfg.tangent_cap) * dir;
  }
  const double length = alpha.norm();
  if (length > cfg.tangent_cap) alpha *= cfg.tangent_cap / length;
  const CVector combined = directions * alpha.cast<cplx>();
  out.h = hermitian_part(Eigen::Map<const CMatrix>(combined.data(), dim, dim));
  return out;
}

namespace detail {

struct TrialPoint {
  CMatrix u;
  double residual;
  double probability;
};

class UpdateBuilder {
 public:
  UpdateBuilder(const FidelityFrame& ff, const CMatrix& x, Index& rank, const SolverConfig& cfg)
      : ff_(ff), x_(x), rank_(rank), cfg_(cfg) {}

  CMatrix apply(const CMatrix& u, double tau) {
    const Index rest = x_.rows() - 1;
    const CVector t = ff_.admissible(tau * first_column_block(x_));
    const double phi = tau * x_(0, 0).real();
    const CMatrix omega = tau * hermitian_part(x_.bottomRightCorner(rest, rest));
    OmegaFactor f;
    for (;;) {
      if (rank_ >= rest) {
        f = cayley_exact(omega);
        break;
      }
      f = cayley_lowrank(omega, rank_);
      if (f.truncation <= cfg_.lanczos_tolerance) break;
      rank_ = std::min<Index>(2 * rank_, rest);
    }
    return apply_update(u, t, phi, f);
  }

 private:
  const FidelityFrame& ff_;
  const CMatrix& x_;
  Index& rank_;
  const SolverConfig& cfg_;
};

}  // namespace detail

/// Runs the optimizer from a given feasible starting unitary.
inline RunResult optimize_from(const HeraldingProblem& prob, const GammaBasis& gb, const CMatrix& u0,
                               const SolverConfig& cfg) {
  cfg.validate(prob.dim());
  const auto start = std::chrono::steady_clock::now();
  RunResult res;
  res.seed = cfg.seed;
  CMatrix u = u0;
  Index rank = cfg.lanczos_initial_rank;
  int stationary_count = 0;
  double tangent_radius = cfg.tangent_cap;
  bool done = false;

  for (int iter = 0; iter < cfg.max_outer_iters && !done; ++iter) {
    const RotatedFrame frame = rotate(u, gb, true);
    const FidelityFrame ff = build_frame(u, prob);
    const double r_now = frame.residual;
    const double p_now = std::norm(ff.z);
    const CMatrix grad = residual_gradient(frame, gb);

    TangentStep tangent = tangent_step(u, prob, frame, ff, gb, cfg);
    if (tangent.dof >= 0) {
      res.tangent_dof = tangent.dof;
      res.tangent_norm = tangent.raw_norm;
    }
    res.iterations = iter;
    if (r_now <= cfg.eps_r && tangent.dof >= 0 && (tangent.raw_norm <= cfg.eps_t || tangent.dof == 0)) {
      res.status = RunStatus::kFeasibleOptimum;
      done = true;
      break;
    }

    const double tangent_size = tangent.h.norm();
    if (tangent_size > tangent_radius) tangent.h *= tangent_radius / tangent_size;

    NormalStep normal = normal_step(frame, ff, gb, grad, cfg);
    const double normal_norm = normal.h.norm();
    if (r_now > cfg.eps_r && normal_norm < cfg.stationary_step) {
      if (++stationary_count >= cfg.stationary_patience) {
        res.status = RunStatus::kInfeasibleStationary;
        done = true;
        break;
      }
    } else {
      stationary_count = 0;
    }

    const double dr_n = frob_inner(grad, normal.h);
    const double dr_t = frob_inner(grad, tangent.h);
    const double dp_n = detail::probability_slope(ff, normal.h);
    const double dp_t = detail::probability_slope(ff, tangent.h);

    bool use_tangent = tangent.h.norm() > 0.0;
    double eta = cfg.eta_initial;
    double slope = 0.0;
    // keep at least half of the normal-step decrease of R
    const double target = 0.5 * std::min(dr_n, 0.0);
    for (;;) {
      slope = use_tangent ? dr_n + dr_t - eta * (dp_n + dp_t) : dr_n - eta * dp_n;
      if (slope < 0.0 && slope <= target) break;
      eta *= 0.5;
      if (eta < cfg.eta_min) {
        if (!use_tangent) break;
        use_tangent = false;
        eta = cfg.eta_initial;
      }
    }

    IterationRecord rec;
    rec.iteration = iter;
    rec.residual = r_now;
    rec.probability = p_now;
    rec.normal_norm = normal_norm;
    rec.tangent_norm = tangent.h.norm();
    rec.cg_iterations = normal.iterations;

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      if (!(slope < 0.0)) break;
      const CMatrix x = use_tangent ? CMatrix(normal.h + tangent.h) : normal.h;
      const double merit0 = r_now - eta * p_now;
      detail::UpdateBuilder builder(ff, x, rank, cfg);
      const bool precise = r_now < 1e-6;
      double tau = 1.0;
      for (int trial = 0; trial < cfg.max_line_search_trials; ++trial, tau *= cfg.shrink) {
        CMatrix cand = builder.apply(u, tau);
        const double r_new = rotate(cand, gb, precise).residual;
        const double p_new = std::norm(success_amplitude(cand, prob).z);
        const double merit = r_new - eta * p_new;
        if (merit <= merit0 + cfg.armijo * tau * slope) {
          accepted = true;
          u = std::move(cand);
          rec.merit_before = merit0;
          rec.merit_after = merit;
          rec.eta = eta;
          rec.tau = tau;
          break;
        }
      }
      if (!accepted && use_tangent) {
        use_tangent = false;
        eta = cfg.eta_initial;
        slope = dr_n - eta * dp_n;
        while (!(slope < 0.0 && slope <= target) && eta >= cfg.eta_min) {
          eta *= 0.5;
          slope = dr_n - eta * dp_n;
        }
      } else {
        break;
      }
    }
    rec.tangent_dropped = !use_tangent && tangent.h.norm() > 0.0;
    if (accepted && use_tangent) {
      tangent_radius = rec.tau == 1.0 ? std::min(cfg.tangent_cap, 2.0 * tangent_radius)
                                      : std::max(rec.tau * tangent.h.norm(), cfg.tangent_min_radius);
    }

    rec.lanczos_rank = rank;

    if (!accepted) {
      res.status = RunStatus::kLineSearchFailure;
      if (cfg.record_history) res.history.push_back(rec);
      done = true;
      break;
    }

    if (unitarity_defect(u) > 1e-10 || fidelity_residual(u, prob).norm() > 1e-13)
      u = detail::repair_unitary(u, prob);
    rec.fidelity_residual = fidelity_residual(u, prob).norm();
    if (cfg.record_history) res.history.push_back(rec);
    res.iterations = iter + 1;
  }
  if (!done) res.status = RunStatus::kIterationLimit;

  const RotatedFrame final_frame = rotate(u, gb, true);
  res.residual = final_frame.residual;
  const auto amp = success_amplitude(u, prob);
  res.z = amp.z;
  res.probability = amp.probability;
  if (res.residual <= 1e-8) {
    try {
      res.s = extract_scattering(u, gb).s;
    } catch (const FeasibilityError& e) {
      res.extraction_error = e.what();
    }
  }
  res.u = std::move(u);
  res.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return res;
}

inline RunResult optimize(const HeraldingProblem& prob, const GammaBasis& gb, const SolverConfig& cfg) {
  return optimize_from(prob, gb, initial_feasible_unitary(prob, cfg.seed).matrix, cfg);
}

inline RunResult optimize(const HeraldingProblem& prob, const SolverConfig& cfg) {
  return optimize(prob, GammaBasis(prob.space()), cfg);
}

struct ProbabilityCluster {
  double probability = 0.0;
  double min = 0.0;
  double max = 0.0;
  int count = 0;
};

/// Groups sorted values whose neighbours lie within `resolution`.
inline std::vector<ProbabilityCluster> cluster_probabilities(std::vector<double> values, double resolution) {
  std::sort(values.begin(), values.end());
  std::vector<ProbabilityCluster> out;
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i == 0 || values[i] - values[i - 1] > resolution) {
      if (!out.empty()) out.back().probability = sum / out.back().count;
      out.push_back({values[i], values[i], values[i], 0});
      sum = 0.0;
    }
    auto& c = out.back();
    c.max = values[i];
    ++c.count;
    sum += values[i];
  }
  if (!out.empty()) out.back().probability = sum / out.back().count;
  return out;
}

struct MultistartSummary {
  std::vector<RunResult> runs;
  std::vector<ProbabilityCluster> clusters;
  int feasible = 0;
  std::map<std::string, int> status_counts;
};

inline std::uint64_t run_seed(std::uint64_t seed, int run) { return mix_seed(seed, static_cast<std::uint64_t>(run)); }

/// Worker count from a request, capped by HERALD_THREADS and the hardware.
inline int resolve_workers(int requested) {
  int workers = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("HERALD_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) workers = std::min(workers, cap);
  }
  return std::max(1, workers);
}

inline MultistartSummary multistart(const HeraldingProblem& prob, const SolverConfig& cfg, int runs, int workers,
                                    const std::function<void(const RunResult&, int)>& on_done = {}) {
  if (runs < 1) throw std::invalid_argument("multistart needs at least one run");
  const GammaBasis gb(prob.space());
  MultistartSummary summary;
  summary.runs.resize(static_cast<std::size_t>(runs));
  std::atomic<int> next{0};
  std::mutex report;
  auto work = [&]() {
    for (int i = next++; i < runs; i = next++) {
      SolverConfig local = cfg;
      local.seed = run_seed(cfg.seed, i);
      RunResult r = optimize(prob, gb, local);
      if (on_done) {
        std::lock_guard<std::mutex> lock(report);
        on_done(r, i);
      }
      summary.runs[static_cast<std::size_t>(i)] = std::move(r);
    }
  };
  workers = std::min(workers, runs);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  std::vector<double> feasible_p;
  for (const auto& r : summary.runs) {
    ++summary.status_counts[to_string(r.status)];
    if (r.status == RunStatus::kFeasibleOptimum) {
      ++summary.feasible;
      feasible_p.push_back(r.probability);
    }
  }
  summary.clusters = cluster_probabilities(feasible_p, 1e-4);
  return summary;
}

struct BaselineConfig {
  double p = 2.0;
  int max_iters = 2000;
  double gradient_tolerance = 1e-10;
  std::uint64_t seed = 1;
};

struct BaselineResult {
  double fidelity = 0.0;
  double probability = 0.0;
  ScatteringMatrix s;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

/// Heralded amplitudes A_alpha = <(k_alpha, m)|U(S)|input> from permanents,
/// and their derivatives dA_alpha / dK_ij for S -> S e^{iK}:
/// i <mu_alpha| U(S) a^dag_i a_j |input>.
struct BaselineAmplitudes {
  CVector a;
  std::vector<CMatrix> d;
};

inline BaselineAmplitudes baseline_amplitudes(const CMatrix& s, const HeraldingProblem& prob) {
  const FockSpace& space = *prob.space();
  const int n_modes = space.modes();
  const Occupation& in = prob.input();
  BaselineAmplitudes out;
  out.a.resize(prob.output_dim());
  out.d.assign(static_cast<std::size_t>(prob.output_dim()), CMatrix::Zero(n_modes, n_modes));
  for (Index k = 0; k < prob.output_dim(); ++k) {
    const Occupation& target = space.state(prob.mu()[static_cast<std::size_t>(k)]);
    out.a(k) = amplitude_oracle(s, in, target);
    for (int i = 0; i < n_modes; ++i)
      for (int j = 0; j < n_modes; ++j) {
        if (in[j] == 0) continue;
        Occupation moved = in;
        double weight = std::sqrt(static_cast<double>(in[j]));
        moved[j] -= 1;
        weight *= std::sqrt(static_cast<double>(moved[i] + 1));
        moved[i] += 1;
        out.d[static_cast<std::size_t>(k)](i, j) = kI * weight * amplitude_oracle(s, moved, target);
      }
  }
  return out;
}

struct BaselineValue {
  double objective;
  double fidelity;
  double probability;
  CMatrix gradient;
};

inline BaselineValue baseline_value(const CMatrix& s, const HeraldingProblem& prob, double p, bool with_gradient) {
  const auto amps = baseline_amplitudes(s, prob);
  const CVector& a = prob.target();
  const double prob_total = amps.a.squaredNorm();
  const cplx overlap = a.dot(amps.a);
  const double q = std::norm(overlap);
  BaselineValue v;
  v.probability = prob_total;
  v.fidelity = prob_total > 1e-30 ? q / prob_total : 1.0;
  v.objective = prob_total > 1e-300 ? prob_total * std::pow(v.fidelity, p) : 0.0;
  if (!with_gradient) return v;
  const int n_modes = static_cast<int>(s.rows());
  CMatrix c = CMatrix::Zero(n_modes, n_modes);
  if (prob_total > 1e-300 && q > 1e-300) {
    for (Index k = 0; k < a.size(); ++k) {
      const cplx w = v.objective * ((1.0 - p) * 2.0 * std::conj(amps.a(k)) / prob_total +
                                    p * 2.0 * std::conj(overlap) * std::conj(a(k)) / q);
      c += w * amps.d[static_cast<std::size_t>(k)];
    }
  }
  // df = Re sum_ij K_ij c_ij = <K, Herm(c^T)>
  v.gradient = hermitian_part(c.transpose());
  return v;
}

inline CMatrix cayley(const CMatrix& x) {
  const Index n = x.rows();
  const CMatrix eye = CMatrix::Identity(n, n);
  return (eye - (kI * 0.5) * x).partialPivLu().solve(eye + (kI * 0.5) * x);
}

}  // namespace detail

/// Maximizes P F^p directly over the scattering matrix by Riemannian
/// gradient ascent with a Cayley retraction and backtracking.
inline BaselineResult baseline_pfp(const HeraldingProblem& prob, const BaselineConfig& cfg) {
  if (!(cfg.p >= 1.0)) throw std::invalid_argument("baseline exponent p must be at least 1");
  Rng rng(cfg.seed);
  CMatrix s = haar_unitary(prob.modes(), rng);
  auto value = detail::baseline_value(s, prob, cfg.p, true);
  double step = 1.0;
  int it = 0;
  bool converged = false;
  for (; it < cfg.max_iters; ++it) {
    const double gnorm2 = value.gradient.squaredNorm();
    if (std::sqrt(gnorm2) <= cfg.gradient_tolerance) {
      converged = true;
      break;
    }
    bool accepted = false;
    step = std::min(step * 2.0, 1e3);
    for (int trial = 0; trial < 60; ++trial, step *= 0.5) {
      const CMatrix cand = s * detail::cayley(step * value.gradient);
      const auto v = detail::baseline_value(cand, prob, cfg.p, false);
      if (v.objective >= value.objective + 0.25 * step * gnorm2) {
        s = reorthonormalize(cand);
        value = detail::baseline_value(s, prob, cfg.p, true);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      converged = true;
      break;
    }
  }
  return {value.fidelity, value.probability, ScatteringMatrix(s, 1e-10), it, converged};
}

}  // namespace fockopt
