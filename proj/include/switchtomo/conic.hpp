// Copyright 2026 The switchtomo authors
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

#include <cstdio>
#include <functional>
#include <limits>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "switchtomo/qsys.hpp"

namespace switchtomo::conic {

using qsys::CMat;
using qsys::RVec;
using qsys::SystemLayout;

// ---------------------------------------------------------------------------
// Program description
// ---------------------------------------------------------------------------

enum class BlockKind { Free, NonNeg, PsdHerm };

struct Block {
  BlockKind kind;
  int size = 0;      // number of real coordinates
  int herm_dim = 0;  // matrix dimension for PsdHerm blocks
  int offset = 0;
};

/// Linear conic program: min c.x subject to A x = b and x in the product of
/// the declared cone blocks. PSD blocks are stored in the orthonormal
/// Hermitian (Pauli-string) coordinates of qsys.
class ConicProgram {
 public:
  int add_block(BlockKind kind, int size, int herm_dim = 0) {
    if (kind == BlockKind::PsdHerm) {
      if (herm_dim * herm_dim != size || (herm_dim & (herm_dim - 1)) != 0)
        throw std::invalid_argument("ConicProgram: PSD block needs size d^2 with d a power of 2");
    }
    Block b{kind, size, herm_dim, n_};
    n_ += size;
    blocks_.push_back(b);
    c_.conservativeResize(n_);
    c_.tail(size).setZero();
    return static_cast<int>(blocks_.size()) - 1;
  }

  int offset(int block) const { return blocks_[static_cast<size_t>(block)].offset; }
  int total_size() const { return n_; }
  int row_count() const { return static_cast<int>(b_.size()); }
  const std::vector<Block>& blocks() const { return blocks_; }

  /// Adds one equality row; entries are (block, local index, coefficient).
  void add_row(const std::vector<std::tuple<int, int, double>>& entries, double rhs) {
    const int row = static_cast<int>(b_.size());
    for (auto& [blk, loc, coef] : entries) {
      if (loc < 0 || loc >= blocks_[static_cast<size_t>(blk)].size)
        throw std::out_of_range("ConicProgram::add_row: local index out of block range");
      triplets_.emplace_back(row, offset(blk) + loc, coef);
    }
    b_.push_back(rhs);
  }

  void add_objective(int block, int local, double coef) { c_(offset(block) + local) += coef; }

  void add_objective(int block, const RVec& coefs) {
    c_.segment(offset(block), coefs.size()) += coefs;
  }

  Eigen::SparseMatrix<double> constraint_matrix() const {
    Eigen::SparseMatrix<double> a(row_count(), n_);
    a.setFromTriplets(triplets_.begin(), triplets_.end());
    return a;
  }

  RVec rhs() const {
    RVec b(row_count());
    for (int i = 0; i < row_count(); ++i) b(i) = b_[static_cast<size_t>(i)];
    return b;
  }

  const RVec& objective() const { return c_; }

 private:
  std::vector<Block> blocks_;
  std::vector<Eigen::Triplet<double>> triplets_;
  std::vector<double> b_;
  RVec c_ = RVec::Zero(0);
  int n_ = 0;
};

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

enum class SolveStatus { Optimal, MaxIter, Infeasible };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "?";
}

struct SolveOptions {
  double rho = 1.0;        // fixed penalty parameter
  double alpha = 1.6;      // over-relaxation
  int max_iter = 100000;
  double eps = 1e-8;       // primal/dual residual tolerance
  int check_every = 25;
  int stall_window = 500;  // iterations without progress before declaring infeasible
  double stall_level = 1e-5;
  bool scale_rows = true;  // diagonal preconditioning of the constraint matrix
  bool verbose = false;
};

struct Solution {
  SolveStatus status = SolveStatus::MaxIter;
  RVec x;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;

  RVec block(const ConicProgram& p, int id) const {
    return x.segment(p.offset(id), p.blocks()[static_cast<size_t>(id)].size);
  }
};

namespace detail {

inline void project_cones(const std::vector<Block>& blocks, RVec& v,
                          std::vector<SystemLayout>& layouts) {
  for (size_t k = 0; k < blocks.size(); ++k) {
    const Block& b = blocks[k];
    switch (b.kind) {
      case BlockKind::Free:
        break;
      case BlockKind::NonNeg:
        v.segment(b.offset, b.size) = v.segment(b.offset, b.size).cwiseMax(0.0);
        break;
      case BlockKind::PsdHerm: {
        RVec coords = v.segment(b.offset, b.size);
        CMat m = qsys::from_coords(coords, layouts[k]);
        Eigen::SelfAdjointEigenSolver<CMat> es(m);
        RVec clipped = es.eigenvalues().cwiseMax(0.0);
        CMat proj = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
        v.segment(b.offset, b.size) = qsys::to_coords(proj, layouts[k]);
        break;
      }
    }
  }
}

}  // namespace detail

/// Operator-splitting solve: alternate projections onto the cone product and
/// the affine constraint set with over-relaxation and scaled dual updates.
/// Deterministic for fixed options. Declares infeasibility when the gap
/// between the two projection sets stalls above `stall_level`.
inline Solution solve(const ConicProgram& prog, const SolveOptions& opts = {},
                      const RVec* warm_start = nullptr) {
  const int n = prog.total_size();
  const int m = prog.row_count();

  Eigen::SparseMatrix<double> a = prog.constraint_matrix();
  RVec b = prog.rhs();

  if (opts.scale_rows) {
    RVec norms = RVec::Zero(m);
    for (int k = 0; k < a.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it)
        norms(it.row()) += it.value() * it.value();
    norms = norms.cwiseSqrt().cwiseMax(1e-12);
    for (int k = 0; k < a.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it)
        it.valueRef() /= norms(it.row());
    b = b.cwiseQuotient(norms);
  }

  Eigen::SparseMatrix<double> gram = (a * a.transpose()).pruned();
  for (int i = 0; i < m; ++i) gram.coeffRef(i, i) += 1e-12;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(gram);
  if (chol.info() != Eigen::Success)
    throw std::runtime_error("conic::solve: constraint Gram factorization failed");

  auto project_affine = [&](const RVec& v) -> RVec {
    RVec resid = a * v - b;
    return v - a.transpose() * chol.solve(resid);
  };

  std::vector<SystemLayout> layouts(prog.blocks().size());
  for (size_t k = 0; k < prog.blocks().size(); ++k)
    if (prog.blocks()[k].kind == BlockKind::PsdHerm) {
      int nq = 0;
      while ((1 << nq) < prog.blocks()[k].herm_dim) ++nq;
      layouts[k] = SystemLayout::qubits(nq);
    }

  const RVec c_over_rho = prog.objective() / opts.rho;

  RVec z = warm_start ? project_affine(*warm_start) : project_affine(RVec::Zero(n));
  RVec u = RVec::Zero(n);
  RVec x = z;

  Solution sol;
  double best_gap = std::numeric_limits<double>::infinity();
  int best_gap_iter = 0;

  for (int it = 1; it <= opts.max_iter; ++it) {
    x = z - u - c_over_rho;
    detail::project_cones(prog.blocks(), x, layouts);
    RVec xhat = opts.alpha * x + (1.0 - opts.alpha) * z;
    RVec z_prev = z;
    z = project_affine(xhat + u);
    u += xhat - z;

    if (it % opts.check_every == 0 || it == opts.max_iter) {
      double scale = std::max({1.0, x.norm(), z.norm()});
      double rp = (x - z).norm() / scale;
      double rd = opts.rho * (z - z_prev).norm() / scale;
      sol.iterations = it;
      sol.primal_residual = rp;
      sol.dual_residual = rd;
      if (opts.verbose && it % (opts.check_every * 40) == 0)
        std::fprintf(stderr, "  conic iter %6d  rp %.3e  rd %.3e\n", it, rp, rd);
      if (rp < opts.eps && rd < opts.eps) {
        sol.status = SolveStatus::Optimal;
        break;
      }
      if (rp < best_gap * (1.0 - 1e-3)) {
        best_gap = rp;
        best_gap_iter = it;
      } else if (rp > opts.stall_level && it - best_gap_iter >= opts.stall_window && it > 2 * opts.stall_window) {
        sol.status = SolveStatus::Infeasible;
        break;
      }
    }
  }

  sol.x = z;
  sol.objective = prog.objective().dot(z);
  return sol;
}

// ---------------------------------------------------------------------------
// Program fragments
// ---------------------------------------------------------------------------

/// Epigraph encoding of sum_i |r_i|: adds nonnegative pairs (u, v) with
/// r = u - v and objective weight * sum(u + v). Each residual row is a linear
/// expression over existing blocks plus the fresh pair.
struct L1Fragment {
  int u_block = -1;
  int v_block = -1;
};

inline L1Fragment l1_epigraph(ConicProgram& prog,
                              const std::vector<std::vector<std::tuple<int, int, double>>>& rows,
                              const std::vector<double>& rhs, double weight) {
  const int dim = static_cast<int>(rows.size());
  L1Fragment f;
  f.u_block = prog.add_block(BlockKind::NonNeg, dim);
  f.v_block = prog.add_block(BlockKind::NonNeg, dim);
  for (int i = 0; i < dim; ++i) {
    auto entries = rows[static_cast<size_t>(i)];
    entries.emplace_back(f.u_block, i, -1.0);
    entries.emplace_back(f.v_block, i, 1.0);
    prog.add_row(entries, rhs[static_cast<size_t>(i)]);
    prog.add_objective(f.u_block, i, weight);
    prog.add_objective(f.v_block, i, weight);
  }
  return f;
}

/// Membership of the linear expression G (given per coordinate as entries
/// over existing blocks) in the dual cone of (PSD intersect subspace):
/// G = P + Q with P PSD and Q supported outside the subspace. Encoded by a
/// fresh PSD block P and rows G[s] - P[s] = 0 for every coordinate s the
/// subspace mask allows.
inline int dual_cone_membership(ConicProgram& prog,
                                const std::function<std::vector<std::tuple<int, int, double>>(int)>& g_entries,
                                const std::vector<int>& subspace_allowed, int herm_dim) {
  int p = prog.add_block(BlockKind::PsdHerm, herm_dim * herm_dim, herm_dim);
  for (int s : subspace_allowed) {
    auto entries = g_entries(s);
    entries.emplace_back(p, s, -1.0);
    prog.add_row(entries, 0.0);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Structured least-absolute-residual programs
// ---------------------------------------------------------------------------
//
// Programs of the form
//     min (1/m) |L(w) - p|_1          (Fit mode)
//     max  g.w  s.t. |L(w) - p|_1 <= radius   (WorstCase mode)
// over a PSD matrix variable w (in Hermitian coordinates) with a set of
// coordinates pinned to fixed values. L is supplied as a matrix-free
// operator; the affine projection uses one dense Cholesky of
// I + P L^T L P, which the caller can cache across solves.

struct L1FitProblem {
  enum class Mode { Fit, WorstCase };
  Mode mode = Mode::Fit;
  int n = 0;         // coordinate count of w
  int m = 0;         // residual count
  int herm_dim = 0;  // matrix dimension of w
  std::function<RVec(const RVec&)> forward;  // L w
  std::function<RVec(const RVec&)> adjoint;  // L^T y
  std::vector<int> fixed_coords;
  RVec fixed_values;
  RVec target;            // p
  RVec linear_objective;  // g (WorstCase)
  double ball_radius = 0.0;  // |r|_1 bound (WorstCase)
};

/// Cached affine-projection factor for one (operator, fixed-coordinate)
/// combination.
struct L1FitFactor {
  std::vector<char> is_fixed;
  Eigen::LLT<qsys::RMat> llt;

  L1FitFactor(const L1FitProblem& prob, const qsys::RMat& gram /* L^T L, n x n */) {
    is_fixed.assign(static_cast<size_t>(prob.n), 0);
    for (int s : prob.fixed_coords) is_fixed[static_cast<size_t>(s)] = 1;
    qsys::RMat m = gram;
    for (int i = 0; i < prob.n; ++i) {
      if (is_fixed[static_cast<size_t>(i)]) {
        m.row(i).setZero();
        m.col(i).setZero();
      }
      m(i, i) += 1.0;
    }
    llt.compute(m);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("L1FitFactor: Cholesky of the projection matrix failed");
  }
};

struct L1FitSolution {
  SolveStatus status = SolveStatus::MaxIter;
  RVec coords;        // w
  RVec residuals;     // L w - p
  double objective = 0.0;  // mean |residual| (Fit) or g.w (WorstCase)
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
};

namespace detail {

inline void soft_threshold(RVec& v, double t) {
  for (int i = 0; i < v.size(); ++i)
    v(i) = v(i) > t ? v(i) - t : (v(i) < -t ? v(i) + t : 0.0);
}

/// Euclidean projection onto the l1 ball of the given radius.
inline void l1_ball_project(RVec& v, double radius) {
  double norm1 = v.cwiseAbs().sum();
  if (norm1 <= radius) return;
  RVec mags = v.cwiseAbs();
  std::sort(mags.data(), mags.data() + mags.size(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  for (int k = 0; k < mags.size(); ++k) {
    cum += mags(k);
    double cand = (cum - radius) / (k + 1);
    if (k + 1 == mags.size() || mags(k + 1) <= cand) {
      theta = cand;
      break;
    }
  }
  soft_threshold(v, theta);
}

}  // namespace detail

inline L1FitSolution solve_l1fit(const L1FitProblem& prob, const L1FitFactor& factor,
                                 const SolveOptions& opts = {}, const RVec* warm_w = nullptr) {
  const int n = prob.n;
  const int m = prob.m;
  const SystemLayout wlay = [&] {
    int nq = 0;
    while ((1 << nq) < prob.herm_dim) ++nq;
    return SystemLayout::qubits(nq);
  }();

  // Constant parts of the affine projection.
  RVec w_fixed = RVec::Zero(n);
  for (size_t i = 0; i < prob.fixed_coords.size(); ++i)
    w_fixed(prob.fixed_coords[i]) = prob.fixed_values(static_cast<Eigen::Index>(i));
  const RVec l_wfixed = prob.forward(w_fixed);

  auto mask_free = [&](RVec& v) {
    for (int s : prob.fixed_coords) v(s) = 0.0;
  };

  // Projection of (vw, vr) onto {(w, r): r = L w - p, fixed coordinates}.
  auto project_affine = [&](const RVec& vw, const RVec& vr, RVec& zw, RVec& zr) {
    RVec t = prob.target + vr - l_wfixed;
    RVec rhs = vw + prob.adjoint(t);
    mask_free(rhs);
    zw = factor.llt.solve(rhs);
    mask_free(zw);
    zw += w_fixed;
    zr = prob.forward(zw) - prob.target;
  };

  const double rho = opts.rho;
  RVec zw(n), zr(m);
  {
    RVec seed = warm_w ? *warm_w : RVec::Zero(n);
    project_affine(seed, prob.forward(seed) - prob.target, zw, zr);
  }
  RVec uw = RVec::Zero(n), ur = RVec::Zero(m);
  RVec xw(n), xr(m);

  L1FitSolution sol;
  double best_gap = std::numeric_limits<double>::infinity();
  int best_gap_iter = 0;

  for (int it = 1; it <= opts.max_iter; ++it) {
    // Cone / prox step.
    xw = zw - uw;
    if (prob.mode == L1FitProblem::Mode::WorstCase) xw += prob.linear_objective / rho;
    {
      CMat mwork = qsys::from_coords(xw, wlay);
      Eigen::SelfAdjointEigenSolver<CMat> es(mwork);
      RVec clipped = es.eigenvalues().cwiseMax(0.0);
      xw = qsys::to_coords(es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint(),
                           wlay);
    }
    xr = zr - ur;
    if (prob.mode == L1FitProblem::Mode::Fit)
      detail::soft_threshold(xr, 1.0 / (static_cast<double>(m) * rho));
    else
      detail::l1_ball_project(xr, prob.ball_radius);

    RVec xhat_w = opts.alpha * xw + (1.0 - opts.alpha) * zw;
    RVec xhat_r = opts.alpha * xr + (1.0 - opts.alpha) * zr;
    RVec zw_prev = zw, zr_prev = zr;
    project_affine(xhat_w + uw, xhat_r + ur, zw, zr);
    uw += xhat_w - zw;
    ur += xhat_r - zr;

    if (it % opts.check_every == 0 || it == opts.max_iter) {
      double scale = std::max({1.0, xw.norm() + xr.norm(), zw.norm() + zr.norm()});
      double rp = std::sqrt((xw - zw).squaredNorm() + (xr - zr).squaredNorm()) / scale;
      double rd = rho *
                  std::sqrt((zw - zw_prev).squaredNorm() + (zr - zr_prev).squaredNorm()) / scale;
      sol.iterations = it;
      sol.primal_residual = rp;
      sol.dual_residual = rd;
      if (opts.verbose && it % (opts.check_every * 40) == 0)
        std::fprintf(stderr, "  l1fit iter %6d  rp %.3e  rd %.3e\n", it, rp, rd);
      if (rp < opts.eps && rd < opts.eps) {
        sol.status = SolveStatus::Optimal;
        break;
      }
      if (rp < best_gap * (1.0 - 1e-3)) {
        best_gap = rp;
        best_gap_iter = it;
      } else if (rp > opts.stall_level && it - best_gap_iter >= opts.stall_window &&
                 it > 2 * opts.stall_window) {
        sol.status = SolveStatus::Infeasible;
        break;
      }
    }
  }

  sol.coords = zw;
  sol.residuals = zr;
  sol.objective = prob.mode == L1FitProblem::Mode::Fit
                      ? zr.cwiseAbs().sum() / static_cast<double>(m)
                      : prob.linear_objective.dot(zw);
  return sol;
}

}  // namespace switchtomo::conic
