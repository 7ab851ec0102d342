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

#include "switchtomo/conic.hpp"
#include "switchtomo/procmat.hpp"
#include "switchtomo/tomoset.hpp"

namespace switchtomo::causal {

using procmat::CausalOrder;
using procmat::ProcessMatrix;
using qsys::CMat;
using qsys::RVec;
using qsys::SysLabel;
using qsys::SystemLayout;

enum class NoiseType { WhiteNoise, Generalized };
enum class SeparabilityDefinition { ConvexMixture, ExtendedControl };

inline const char* to_string(NoiseType n) {
  return n == NoiseType::WhiteNoise ? "white" : "generalized";
}
inline NoiseType noise_from_string(const std::string& s) {
  if (s == "white") return NoiseType::WhiteNoise;
  if (s == "generalized") return NoiseType::Generalized;
  throw std::invalid_argument("unknown noise type: " + s);
}
inline const char* to_string(SeparabilityDefinition d) {
  return d == SeparabilityDefinition::ConvexMixture ? "convex" : "extended";
}
inline SeparabilityDefinition definition_from_string(const std::string& s) {
  if (s == "convex") return SeparabilityDefinition::ConvexMixture;
  if (s == "extended") return SeparabilityDefinition::ExtendedControl;
  throw std::invalid_argument("unknown separability definition: " + s);
}

// ---------------------------------------------------------------------------
// Comb subspaces
// ---------------------------------------------------------------------------
//
// The linear span of processes causally ordered in one direction, derived as
// the null space of the three trace-replacement residual maps. The residual
// maps are assembled column by column in Hermitian coordinates, the row space
// is rank-revealed (singular-value cutoff 1e-9), and the resulting projector
// is snapped to an exact coordinate mask.

struct CombSubspace {
  CausalOrder order;
  std::vector<int> allowed;      // coordinates spanning the subspace
  std::vector<char> is_allowed;  // size 4096
  std::vector<int> killed;       // complement
  int dim = 0;

  void project(RVec& coords) const {
    for (int s : killed) coords(s) = 0.0;
  }
};

namespace detail {

inline int string_digit(int s, int pos) { return (s >> (2 * (5 - pos))) & 3; }

struct TraceCondition {
  std::vector<int> traced;  // factor positions traced out
  int replaced;             // factor position whose marginal is replaced
};

inline std::vector<TraceCondition> comb_conditions(CausalOrder order) {
  // Factor positions on the simplified layout:
  // P_t=0, A_in=1, A_out=2, B_in=3, B_out=4, F_c=5.
  if (order == CausalOrder::AThenB)
    return {{{5}, 4}, {{3, 4, 5}, 2}, {{1, 2, 3, 4, 5}, 0}};
  return {{{5}, 2}, {{1, 2, 5}, 4}, {{1, 2, 3, 4, 5}, 0}};
}

/// Residual-map rows of one trace-replacement condition over all 4096
/// Pauli-string inputs. The image of a basis string vanishes unless all
/// traced digits are identity and the replaced digit is not.
inline void fill_condition_rows(qsys::RMat& m, int row_offset, const TraceCondition& cond) {
  const double scale = std::sqrt(std::pow(2.0, static_cast<double>(cond.traced.size())));
  std::vector<int> kept;
  for (int pos = 0; pos < 6; ++pos) {
    bool t = false;
    for (int q : cond.traced) t = t || (q == pos);
    if (!t) kept.push_back(pos);
  }
  for (int s = 0; s < 4096; ++s) {
    bool traced_identity = true;
    for (int q : cond.traced) traced_identity = traced_identity && (string_digit(s, q) == 0);
    if (!traced_identity) continue;
    if (string_digit(s, cond.replaced) == 0) continue;  // cancels exactly
    int reduced = 0;
    for (int pos : kept) reduced = reduced * 4 + string_digit(s, pos);
    m(row_offset + reduced, s) += scale;
  }
}

}  // namespace detail

inline const CombSubspace& comb_subspace(CausalOrder order) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<CombSubspace>> cache;
  std::scoped_lock lock(mu);
  auto& slot = cache[order == CausalOrder::AThenB ? 0 : 1];
  if (slot) return *slot;

  auto conds = detail::comb_conditions(order);
  int rows = 0;
  std::vector<int> offsets;
  for (auto& c : conds) {
    offsets.push_back(rows);
    rows += 1 << (2 * (6 - static_cast<int>(c.traced.size())));
  }
  qsys::RMat m = qsys::RMat::Zero(rows, 4096);
  for (size_t i = 0; i < conds.size(); ++i)
    detail::fill_condition_rows(m, offsets[i], conds[i]);

  auto rs = qsys::row_space(m);
  auto killed = qsys::mask_of_projector(rs.basis);

  auto sub = std::make_unique<CombSubspace>();
  sub->order = order;
  sub->killed = killed;
  sub->is_allowed.assign(4096, 1);
  for (int s : killed) sub->is_allowed[static_cast<size_t>(s)] = 0;
  for (int s = 0; s < 4096; ++s)
    if (sub->is_allowed[static_cast<size_t>(s)]) sub->allowed.push_back(s);
  sub->dim = static_cast<int>(sub->allowed.size());

  slot = std::move(sub);
  return *slot;
}

// ---------------------------------------------------------------------------
// Zero-coordinate sets for witness structure constraints
// ---------------------------------------------------------------------------

namespace detail {

/// Coordinates a witness must avoid to stay in the span of the family's
/// setting operators (restricted family: no X on the future factor).
inline std::vector<int> family_span_killed(tomoset::SettingFamily fam) {
  const auto& bm = tomoset::born_matrix(fam);
  auto fmask = qsys::mask_of_projector(qsys::row_space(bm.block_f()).basis);
  std::vector<char> f_ok(4, 0);
  for (int i : fmask) f_ok[static_cast<size_t>(i)] = 1;
  std::vector<int> killed;
  for (int s = 0; s < 4096; ++s)
    if (!f_ok[static_cast<size_t>(string_digit(s, 5))]) killed.push_back(s);
  return killed;
}

/// Coordinates killed by the extended-definition structure constraint
/// G = (1_P / d_P) (x) Tr_P(G): everything with past Pauli content.
inline std::vector<int> past_nontrivial_strings() {
  std::vector<int> killed;
  for (int s = 0; s < 4096; ++s)
    if (string_digit(s, 0) != 0) killed.push_back(s);
  return killed;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Witnesses
// ---------------------------------------------------------------------------

struct Witness {
  CMat matrix;
  SystemLayout layout;
  RVec alpha;  // expansion over the family's setting operators
  tomoset::SettingFamily family = tomoset::SettingFamily::Full;
  NoiseType noise = NoiseType::WhiteNoise;
  SeparabilityDefinition definition = SeparabilityDefinition::ConvexMixture;
  double value = 0.0;  // Tr(G W) on the process it was optimized for
  conic::SolveStatus status = conic::SolveStatus::MaxIter;
  int iterations = 0;
};

inline double evaluate_witness(const CMat& g, const ProcessMatrix& w) {
  return qsys::trace_inner(g, w.mat).real();
}

inline double evaluate_witness(const Witness& g, const ProcessMatrix& w) {
  return evaluate_witness(g.matrix, w);
}

inline conic::SolveOptions default_witness_options() {
  conic::SolveOptions o;
  o.rho = 1.0;
  o.eps = 2e-7;
  o.max_iter = 120000;
  return o;
}

/// Optimal causal witness for `w`: minimizes Tr(G W) over witnesses in the
/// span of the family's setting operators, subject to Tr(G W_sep) >= 0 for
/// every process separable under `def` (dual-cone membership per causal
/// order) and the noise normalization (Tr(G) <= Tr(1_W) for white noise,
/// Tr(G Omega) <= 1 for every valid process Omega for generalized noise).
inline Witness optimal_witness(const ProcessMatrix& w, tomoset::SettingFamily family,
                               NoiseType noise, SeparabilityDefinition def,
                               const conic::SolveOptions& opts = default_witness_options()) {
  const SystemLayout layout = SystemLayout::simplified_switch();
  if (!(w.layout == layout)) throw std::invalid_argument("optimal_witness: simplified layout required");
  const RVec wc = qsys::to_coords(w.mat, layout);

  const auto& comb_a = comb_subspace(CausalOrder::AThenB);
  const auto& comb_b = comb_subspace(CausalOrder::BThenA);

  conic::ConicProgram prog;
  const int pa = prog.add_block(conic::BlockKind::PsdHerm, 4096, 64);
  const int qa = prog.add_block(conic::BlockKind::Free, static_cast<int>(comb_a.killed.size()));
  const int pb = prog.add_block(conic::BlockKind::PsdHerm, 4096, 64);
  const int qb = prog.add_block(conic::BlockKind::Free, static_cast<int>(comb_b.killed.size()));

  // Position of each killed coordinate inside the q blocks.
  std::vector<int> qa_pos(4096, -1), qb_pos(4096, -1);
  for (size_t i = 0; i < comb_a.killed.size(); ++i) qa_pos[static_cast<size_t>(comb_a.killed[i])] = static_cast<int>(i);
  for (size_t i = 0; i < comb_b.killed.size(); ++i) qb_pos[static_cast<size_t>(comb_b.killed[i])] = static_cast<int>(i);

  // G[s] = pa[s] + qa[s]; the coupling rows tie the second representation
  // G = pb + qb to the first.
  auto g_entries = [&](int s) {
    std::vector<std::tuple<int, int, double>> e{{pa, s, 1.0}};
    if (qa_pos[static_cast<size_t>(s)] >= 0) e.emplace_back(qa, qa_pos[static_cast<size_t>(s)], 1.0);
    return e;
  };

  for (int s = 0; s < 4096; ++s) {
    auto entries = g_entries(s);
    entries.emplace_back(pb, s, -1.0);
    if (qb_pos[static_cast<size_t>(s)] >= 0) entries.emplace_back(qb, qb_pos[static_cast<size_t>(s)], -1.0);
    prog.add_row(entries, 0.0);
  }

  // Structure constraints: zero coordinates outside the family span and,
  // for the extended definition, any past Pauli content.
  std::vector<char> zeroed(4096, 0);
  if (family == tomoset::SettingFamily::Restricted)
    for (int s : detail::family_span_killed(family)) zeroed[static_cast<size_t>(s)] = 1;
  if (def == SeparabilityDefinition::ExtendedControl)
    for (int s : detail::past_nontrivial_strings()) zeroed[static_cast<size_t>(s)] = 1;
  for (int s = 0; s < 4096; ++s)
    if (zeroed[static_cast<size_t>(s)]) prog.add_row(g_entries(s), 0.0);

  int slack = prog.add_block(conic::BlockKind::NonNeg, 1);
  if (noise == NoiseType::WhiteNoise) {
    // Tr(G) <= Tr(1_W) = 8, i.e. the identity coordinate of G is at most 1.
    auto entries = g_entries(0);
    entries.emplace_back(slack, 0, 1.0);
    prog.add_row(entries, 1.0);
  } else {
    // Tr(G Omega) <= 1 for all valid Omega: there is Y in the constraint
    // span with Y >= G and Tr(Y) <= 8.
    auto validity = procmat::validity_projector(layout);
    const auto& dspan = validity->constrained;
    const int y = prog.add_block(conic::BlockKind::Free, static_cast<int>(dspan.size()));
    const int zpsd = prog.add_block(conic::BlockKind::PsdHerm, 4096, 64);
    std::vector<int> y_pos(4096, -1);
    for (size_t i = 0; i < dspan.size(); ++i) y_pos[static_cast<size_t>(dspan[i])] = static_cast<int>(i);
    for (int s = 0; s < 4096; ++s) {
      auto entries = g_entries(s);
      for (auto& e : entries) std::get<2>(e) = -std::get<2>(e);
      entries.emplace_back(zpsd, s, -1.0);
      if (y_pos[static_cast<size_t>(s)] >= 0) entries.emplace_back(y, y_pos[static_cast<size_t>(s)], 1.0);
      prog.add_row(entries, 0.0);
    }
    prog.add_row({{y, y_pos[0], 1.0}, {slack, 0, 1.0}}, 1.0);
  }

  prog.add_objective(pa, wc);
  for (int s : comb_a.killed) prog.add_objective(qa, qa_pos[static_cast<size_t>(s)], wc(s));

  auto sol = conic::solve(prog, opts);

  RVec g = sol.block(prog, pa);
  RVec qa_val = sol.block(prog, qa);
  for (int s : comb_a.killed) g(s) += qa_val(qa_pos[static_cast<size_t>(s)]);

  Witness out;
  out.layout = layout;
  out.matrix = qsys::from_coords(g, layout);
  out.family = family;
  out.noise = noise;
  out.definition = def;
  out.value = g.dot(wc);
  out.status = sol.status;
  out.iterations = sol.iterations;
  out.alpha = tomoset::born_matrix(family).min_norm_coefficients(g);
  return out;
}

// ---------------------------------------------------------------------------
// Robustness
// ---------------------------------------------------------------------------

struct RobustnessResult {
  double r = 0.0;
  NoiseType noise = NoiseType::WhiteNoise;
  SeparabilityDefinition definition = SeparabilityDefinition::ConvexMixture;
  CMat comb_a, comb_b;       // separable decomposition of the noisy process
  CMat omega;                // generalized-noise process (unnormalized, trace 8r)
  double decomposition_residual = 0.0;
  double cone_violation = 0.0;  // worst negative eigenvalue among certificate blocks
  conic::SolveStatus status = conic::SolveStatus::MaxIter;
  int iterations = 0;
};

inline conic::SolveOptions default_robustness_options() { return default_witness_options(); }

/// Minimal r such that (W + r * noise)/(1 + r) is causally separable under
/// the chosen definition. White noise fixes the noise process to 1_W; the
/// generalized variant lets it range over all valid processes.
inline RobustnessResult robustness(const ProcessMatrix& w, NoiseType noise,
                                   SeparabilityDefinition def,
                                   const conic::SolveOptions& opts = default_robustness_options()) {
  const SystemLayout layout = SystemLayout::simplified_switch();
  if (!(w.layout == layout)) throw std::invalid_argument("robustness: simplified layout required");
  const RVec wc = qsys::to_coords(w.mat, layout);

  const auto& comb_a = comb_subspace(CausalOrder::AThenB);
  const auto& comb_b = comb_subspace(CausalOrder::BThenA);
  const bool ext = def == SeparabilityDefinition::ExtendedControl;

  auto masked = [&](int s, double v) {
    return (!ext || detail::string_digit(s, 0) == 0) ? v : 0.0;
  };

  conic::ConicProgram prog;
  const int sa = prog.add_block(conic::BlockKind::PsdHerm, 4096, 64);
  const int sb = prog.add_block(conic::BlockKind::PsdHerm, 4096, 64);
  for (int s : comb_a.killed) prog.add_row({{sa, s, 1.0}}, 0.0);
  for (int s : comb_b.killed) prog.add_row({{sb, s, 1.0}}, 0.0);

  if (noise == NoiseType::WhiteNoise) {
    const int r = prog.add_block(conic::BlockKind::NonNeg, 1);
    for (int s = 0; s < 4096; ++s) {
      std::vector<std::tuple<int, int, double>> entries{{sa, s, 1.0}, {sb, s, 1.0}};
      if (s == 0) entries.emplace_back(r, 0, -1.0);
      prog.add_row(entries, masked(s, wc(s)));
    }
    prog.add_objective(r, 0, 1.0);
  } else {
    auto validity = procmat::validity_projector(layout);
    const int om = prog.add_block(conic::BlockKind::PsdHerm, 4096, 64);
    for (int s : validity->constrained)
      if (s != 0) prog.add_row({{om, s, 1.0}}, 0.0);
    for (int s = 0; s < 4096; ++s) {
      std::vector<std::tuple<int, int, double>> entries{{sa, s, 1.0}, {sb, s, 1.0}};
      if (!ext || detail::string_digit(s, 0) == 0) entries.emplace_back(om, s, -1.0);
      prog.add_row(entries, masked(s, wc(s)));
    }
    prog.add_objective(om, 0, 1.0);
  }

  auto sol = conic::solve(prog, opts);

  RobustnessResult out;
  out.noise = noise;
  out.definition = def;
  out.r = sol.objective;
  out.status = sol.status;
  out.iterations = sol.iterations;
  out.comb_a = qsys::from_coords(sol.block(prog, sa), layout);
  out.comb_b = qsys::from_coords(sol.block(prog, sb), layout);

  RVec lhs = wc;
  if (ext)
    for (int s = 0; s < 4096; ++s) lhs(s) = masked(s, lhs(s));
  if (noise == NoiseType::WhiteNoise) {
    lhs(0) += sol.objective;
  } else {
    out.omega = qsys::from_coords(sol.block(prog, static_cast<int>(prog.blocks().size()) - 1), layout);
    RVec oc = qsys::to_coords(out.omega, layout);
    for (int s = 0; s < 4096; ++s) lhs(s) += masked(s, oc(s));
  }
  RVec diff = lhs - qsys::to_coords(out.comb_a, layout) - qsys::to_coords(out.comb_b, layout);
  out.decomposition_residual = diff.norm();
  out.cone_violation = std::min(qsys::min_eigenvalue(out.comb_a), qsys::min_eigenvalue(out.comb_b));
  return out;
}

}  // namespace switchtomo::causal
