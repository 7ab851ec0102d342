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

#include "switchtomo/causal.hpp"
#include "switchtomo/conic.hpp"
#include "switchtomo/simlab.hpp"

namespace switchtomo::recon {

using procmat::ProcessMatrix;
using qsys::CMat;
using qsys::RMat;
using qsys::RVec;
using simlab::ProbabilityTable;
using tomoset::SettingFamily;

/// Coordinate index of the X direction on the future control factor; the
/// phase-stability constraint is Tr(W X^F) = 0, one affine row.
inline constexpr int kFutureXCoordinate = 1;  // string (I,I,I,I,I,X)

namespace detail {

inline RMat real_kron(const RMat& a, const RMat& b) {
  RMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

struct FitContext {
  std::vector<int> fixed_coords;
  RVec fixed_values;
  std::shared_ptr<conic::L1FitFactor> factor;
};

/// Cached projection factor per (family, future-X flag). The Gram of the
/// Born map is the Kronecker product of the per-slot Grams.
inline const FitContext& fit_context(SettingFamily fam, bool future_x) {
  static std::mutex mu;
  static std::map<int, FitContext> cache;
  std::scoped_lock lock(mu);
  const int key = (fam == SettingFamily::Full ? 0 : 1) * 2 + (future_x ? 1 : 0);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  const auto& bm = tomoset::born_matrix(fam);
  auto validity = procmat::validity_projector(qsys::SystemLayout::simplified_switch());

  FitContext ctx;
  ctx.fixed_coords = validity->constrained;
  if (future_x) ctx.fixed_coords.push_back(kFutureXCoordinate);
  ctx.fixed_values = RVec::Zero(static_cast<Eigen::Index>(ctx.fixed_coords.size()));
  for (size_t i = 0; i < ctx.fixed_coords.size(); ++i)
    if (ctx.fixed_coords[i] == 0) ctx.fixed_values(static_cast<Eigen::Index>(i)) = 1.0;

  RMat gram = real_kron(real_kron(real_kron(bm.gram_p(), bm.gram_a()), bm.gram_b()), bm.gram_f());

  conic::L1FitProblem shape;
  shape.n = 4096;
  shape.herm_dim = 64;
  shape.fixed_coords = ctx.fixed_coords;
  ctx.factor = std::make_shared<conic::L1FitFactor>(shape, gram);
  return cache.emplace(key, std::move(ctx)).first->second;
}

inline conic::L1FitProblem base_problem(const ProbabilityTable& p, bool future_x) {
  const auto& bm = tomoset::born_matrix(p.family);
  const auto& ctx = fit_context(p.family, future_x);
  conic::L1FitProblem prob;
  prob.n = 4096;
  prob.m = bm.rows();
  prob.herm_dim = 64;
  prob.forward = [&bm](const RVec& v) { return bm.apply(v); };
  prob.adjoint = [&bm](const RVec& v) { return bm.apply_adjoint(v); };
  prob.fixed_coords = ctx.fixed_coords;
  prob.fixed_values = ctx.fixed_values;
  prob.target = p.p;
  return prob;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Reconstruction
// ---------------------------------------------------------------------------

struct ReconstructionResult {
  ProcessMatrix w;
  double residual = 0.0;  // mean absolute deviation over all settings
  bool future_x_imposed = false;
  SettingFamily family = SettingFamily::Restricted;
  conic::SolveStatus status = conic::SolveStatus::MaxIter;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

inline conic::SolveOptions default_recon_options() {
  conic::SolveOptions o;
  o.rho = 1.0;
  o.eps = 5e-9;
  o.max_iter = 60000;
  return o;
}

/// Mean absolute deviation between a probability table and the Born-rule
/// predictions of W.
inline double residual(const ProcessMatrix& w, const ProbabilityTable& p) {
  RVec pred = tomoset::born_matrix(p.family).apply(qsys::to_coords(w.mat, w.layout));
  return (pred - p.p).cwiseAbs().sum() / static_cast<double>(p.p.size());
}

/// Least-absolute-residual fit of a valid process matrix to a probability
/// table. With `impose_future_x`, adds the affine row Tr(W X^F) = 0.
inline ReconstructionResult reconstruct(const ProbabilityTable& p, bool impose_future_x = false,
                                        const conic::SolveOptions& opts = default_recon_options(),
                                        const ProcessMatrix* warm = nullptr) {
  if (p.p.size() != tomoset::family_size(p.family))
    throw std::invalid_argument("reconstruct: table incomplete for its family");
  auto prob = detail::base_problem(p, impose_future_x);
  prob.mode = conic::L1FitProblem::Mode::Fit;

  RVec warm_coords;
  const RVec* warm_ptr = nullptr;
  if (warm) {
    warm_coords = qsys::to_coords(warm->mat, warm->layout);
    warm_ptr = &warm_coords;
  }
  auto sol = conic::solve_l1fit(prob, *detail::fit_context(p.family, impose_future_x).factor, opts,
                                warm_ptr);

  ReconstructionResult out;
  out.w = {qsys::from_coords(sol.coords, qsys::SystemLayout::simplified_switch()),
           qsys::SystemLayout::simplified_switch()};
  out.family = p.family;
  out.future_x_imposed = impose_future_x;
  out.status = sol.status;
  out.iterations = sol.iterations;
  out.primal_residual = sol.primal_residual;
  out.dual_residual = sol.dual_residual;
  out.residual = residual(out.w, p);
  return out;
}

// ---------------------------------------------------------------------------
// Worst-case tomography
// ---------------------------------------------------------------------------

struct WorstCaseResult {
  conic::SolveStatus status = conic::SolveStatus::Infeasible;
  ProcessMatrix w;
  double witness_value = 0.0;
  double epsilon = 0.0;
  int iterations = 0;
};

inline conic::SolveOptions default_worst_case_options() {
  conic::SolveOptions o;
  o.rho = 1.0;
  o.eps = 1e-7;
  o.max_iter = 60000;
  o.stall_level = 1e-6;
  return o;
}

/// Maximizes Tr(G W) over valid processes whose predictions deviate from the
/// table by at most epsilon on average: (1/N) sum_s |Tr(S_s W) - p_s| <=
/// epsilon. Reports Infeasible when epsilon is below the attainable
/// residual.
inline WorstCaseResult worst_case(const ProbabilityTable& p, const CMat& witness, double epsilon,
                                  const conic::SolveOptions& opts = default_worst_case_options(),
                                  const ProcessMatrix* warm = nullptr) {
  if (epsilon < 0.0) throw std::invalid_argument("worst_case: epsilon must be nonnegative");
  auto prob = detail::base_problem(p, false);
  prob.mode = conic::L1FitProblem::Mode::WorstCase;
  prob.linear_objective = qsys::to_coords(witness, qsys::SystemLayout::simplified_switch());
  prob.ball_radius = epsilon * static_cast<double>(prob.m);

  RVec warm_coords;
  const RVec* warm_ptr = nullptr;
  if (warm) {
    warm_coords = qsys::to_coords(warm->mat, warm->layout);
    warm_ptr = &warm_coords;
  }
  auto sol = conic::solve_l1fit(prob, *detail::fit_context(p.family, false).factor, opts, warm_ptr);

  WorstCaseResult out;
  out.status = sol.status;
  out.epsilon = epsilon;
  out.iterations = sol.iterations;
  out.w = {qsys::from_coords(sol.coords, qsys::SystemLayout::simplified_switch()),
           qsys::SystemLayout::simplified_switch()};
  out.witness_value = sol.objective;
  return out;
}

struct SweepPoint {
  std::string witness_name;
  double epsilon = 0.0;
  double witness_value = 0.0;
  conic::SolveStatus status = conic::SolveStatus::Infeasible;
};

/// Worst-case witness value over an epsilon grid, one curve per witness.
/// Grid points reuse the previous point's solution as a warm start.
inline std::vector<SweepPoint> sweep_worst_case(
    const ProbabilityTable& p, const std::vector<std::pair<std::string, CMat>>& witnesses,
    const std::vector<double>& eps_grid,
    const conic::SolveOptions& opts = default_worst_case_options()) {
  std::vector<SweepPoint> out;
  for (auto& [name, g] : witnesses) {
    const ProcessMatrix* warm = nullptr;
    ProcessMatrix last;
    for (double eps : eps_grid) {
      auto r = worst_case(p, g, eps, opts, warm);
      out.push_back({name, eps, r.witness_value, r.status});
      if (r.status == conic::SolveStatus::Optimal) {
        last = r.w;
        warm = &last;
      }
    }
  }
  return out;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& rows) {
  os << "witness,epsilon,witness_value,status\n";
  for (auto& r : rows) {
    os << r.witness_name << ',' << r.epsilon << ',';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", r.witness_value);
    os << buf << ',' << conic::to_string(r.status) << '\n';
  }
}

}  // namespace switchtomo::recon
