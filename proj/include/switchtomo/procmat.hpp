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

#include <map>
#include <memory>
#include <mutex>
#include <random>

#include "switchtomo/choi.hpp"
#include "switchtomo/qsys.hpp"

namespace switchtomo::procmat {

using qsys::CMat;
using qsys::Complex;
using qsys::CVec;
using qsys::RVec;
using qsys::SysLabel;
using qsys::SystemLayout;

enum class CausalOrder { AThenB, BThenA };

inline const char* to_string(CausalOrder o) {
  return o == CausalOrder::AThenB ? "A_then_B" : "B_then_A";
}

/// Expected trace of a process matrix: d_P * d_Aout * d_Bout.
inline double expected_trace(const SystemLayout& layout) {
  double t = 1.0;
  for (auto& [l, d] : layout.factors)
    if (l == SysLabel::Pc || l == SysLabel::Pt || l == SysLabel::Aout || l == SysLabel::Bout)
      t *= d;
  return t;
}

struct ProcessMatrix {
  CMat mat;
  SystemLayout layout;

  double trace() const { return mat.trace().real(); }
  int dim() const { return layout.total_dim(); }
};

// ---------------------------------------------------------------------------
// Causally ordered combs and the quantum SWITCH
// ---------------------------------------------------------------------------

namespace detail {

/// Identity Choi vector (1,0,0,1) on a qubit pair.
inline CVec id_choi_vec() { return choi::choi_vector_of_unitary(CMat::Identity(2, 2)); }

/// Process vector of the causally ordered chain P -> first -> second -> future
/// on the six-factor layout ending in `future`. Built in the chain's natural
/// factor order, then reordered to the canonical layout.
inline CVec chain_vector(CausalOrder order, SysLabel future) {
  const CVec id = id_choi_vec();
  CVec v = qsys::kron_vec(qsys::kron_vec(id, id), id);
  SystemLayout natural;
  if (order == CausalOrder::AThenB) {
    natural = {{{SysLabel::Pt, 2},
                {SysLabel::Ain, 2},
                {SysLabel::Aout, 2},
                {SysLabel::Bin, 2},
                {SysLabel::Bout, 2},
                {future, 2}}};
  } else {
    natural = {{{SysLabel::Pt, 2},
                {SysLabel::Bin, 2},
                {SysLabel::Bout, 2},
                {SysLabel::Ain, 2},
                {SysLabel::Aout, 2},
                {future, 2}}};
  }
  SystemLayout canonical{{{SysLabel::Pt, 2},
                          {SysLabel::Ain, 2},
                          {SysLabel::Aout, 2},
                          {SysLabel::Bin, 2},
                          {SysLabel::Bout, 2},
                          {future, 2}}};
  return qsys::reorder_factors_vec(v, natural, canonical);
}

}  // namespace detail

/// Rank-1 process matrix of a causally ordered chain on the simplified
/// switch layout (future factor F_c). Trace 8.
inline ProcessMatrix comb_process(CausalOrder order,
                                  const SystemLayout& layout = SystemLayout::simplified_switch()) {
  if (!(layout == SystemLayout::simplified_switch()))
    throw std::invalid_argument("comb_process: unsupported layout");
  CVec v = detail::chain_vector(order, SysLabel::Fc);
  return {v * v.adjoint(), layout};
}

/// Simplified two-party SWITCH with the control qubit prepared in
/// alpha|0> + beta|1>: W = Tr_Ft |w><w| with
/// |w> = alpha |A->B>|0>_Fc + beta |B->A>|1>_Fc. 64x64, trace 8.
inline ProcessMatrix switch_simplified(const CVec& control) {
  if (control.size() != 2 || std::abs(control.squaredNorm() - 1.0) > 1e-10)
    throw std::invalid_argument("switch_simplified: control must be a normalized qubit state");

  // Working layout: canonical simplified factors, then F_t last.
  SystemLayout working = SystemLayout::simplified_switch();
  working.factors.emplace_back(SysLabel::Ft, 2);

  SystemLayout branch_nat{{{SysLabel::Pt, 2},
                           {SysLabel::Ain, 2},
                           {SysLabel::Aout, 2},
                           {SysLabel::Bin, 2},
                           {SysLabel::Bout, 2},
                           {SysLabel::Ft, 2},
                           {SysLabel::Fc, 2}}};

  CVec ab = qsys::kron_vec(detail::chain_vector(CausalOrder::AThenB, SysLabel::Ft), qsys::ket0());
  CVec ba = qsys::kron_vec(detail::chain_vector(CausalOrder::BThenA, SysLabel::Ft), qsys::ket1());
  CVec w = control(0) * qsys::reorder_factors_vec(ab, branch_nat, working) +
           control(1) * qsys::reorder_factors_vec(ba, branch_nat, working);

  CMat full = w * w.adjoint();
  CMat traced = qsys::partial_trace(full, working,
                                    {SysLabel::Pt, SysLabel::Ain, SysLabel::Aout, SysLabel::Bin,
                                     SysLabel::Bout, SysLabel::Fc});
  return {traced, SystemLayout::simplified_switch()};
}

/// Full SWITCH process with control past and future target kept:
/// 256x256 rank-1 over (P_c, P_t, A_in, A_out, B_in, B_out, F_c, F_t).
inline ProcessMatrix switch_full() {
  SystemLayout canonical = SystemLayout::full_switch();
  SystemLayout nat{{{SysLabel::Pc, 2},
                    {SysLabel::Pt, 2},
                    {SysLabel::Ain, 2},
                    {SysLabel::Aout, 2},
                    {SysLabel::Bin, 2},
                    {SysLabel::Bout, 2},
                    {SysLabel::Ft, 2},
                    {SysLabel::Fc, 2}}};
  CVec ab = qsys::kron_vec(qsys::kron_vec(qsys::ket0(), detail::chain_vector(CausalOrder::AThenB, SysLabel::Ft)),
                           qsys::ket0());
  CVec ba = qsys::kron_vec(qsys::kron_vec(qsys::ket1(), detail::chain_vector(CausalOrder::BThenA, SysLabel::Ft)),
                           qsys::ket1());
  CVec w = qsys::reorder_factors_vec(ab + ba, nat, canonical);
  return {w * w.adjoint(), canonical};
}

/// White noise process: identity / (d_P * d_Aout * d_Bout).
inline ProcessMatrix white_noise_process(const SystemLayout& layout = SystemLayout::simplified_switch()) {
  const int d = layout.total_dim();
  return {CMat::Identity(d, d) / expected_trace(layout), layout};
}

// ---------------------------------------------------------------------------
// Validity subspace
// ---------------------------------------------------------------------------
//
// A Hermitian W is a valid process iff it is PSD and Tr(W D) = 1 for every
// D = (rho (x) A (x) B)^T (x) 1_F with rho a state and A, B CPTP Choi
// operators. The affine constraint span is generated numerically from a
// spanning family (products of four states; Choi operators of one- and
// two-letter words over {I,X,Y,Z,H,S}), rank-revealed per tensor group with
// singular-value cutoff 1e-9, and verified to be coordinate-aligned in the
// Pauli-string basis before being stored as an index mask.

struct ValiditySubspace {
  SystemLayout layout;
  std::vector<int> constrained;  // ascending coordinate indices of the constraint span; includes 0
  std::vector<char> is_constrained;
  int dim = 0;  // number of traceless valid directions

  /// Affine projection onto the valid subspace, in Pauli coordinates.
  void project_affine(RVec& coords) const {
    for (int s : constrained) coords(s) = 0.0;
    coords(0) = 1.0;
  }

  /// Linear projection onto the traceless valid directions.
  void project_linear(RVec& coords) const {
    for (int s : constrained) coords(s) = 0.0;
  }

  CMat project(const CMat& w) const {
    RVec c = qsys::to_coords(w, layout);
    project_affine(c);
    return qsys::from_coords(c, layout);
  }

  /// Euclidean distance of W from the valid affine subspace.
  double residual(const CMat& w) const {
    RVec c = qsys::to_coords(w, layout);
    double r2 = 0.0;
    for (int s : constrained) {
      double target = (s == 0) ? 1.0 : 0.0;
      r2 += (c(s) - target) * (c(s) - target);
    }
    return std::sqrt(r2);
  }

  bool contains(const CMat& w, double tol = 1e-8) const { return residual(w) <= tol; }
};

namespace detail {

inline SystemLayout dummy_qubits(int n) { return SystemLayout::qubits(n); }

inline std::vector<CMat> spanning_states() {
  return {qsys::proj(qsys::ket0()), qsys::proj(qsys::ket1()), qsys::proj(qsys::ket_plus()),
          qsys::proj(qsys::ket_yplus())};
}

inline std::vector<CMat> spanning_unitaries() {
  const Complex im(0, 1);
  CMat h(2, 2);
  h << 1, 1, 1, -1;
  h /= std::sqrt(2.0);
  CMat s(2, 2);
  s << 1, 0, 0, im;
  std::vector<CMat> gens = {qsys::pauli(0), qsys::pauli(1), qsys::pauli(2), qsys::pauli(3), h, s};
  std::vector<CMat> words = gens;
  for (auto& a : gens)
    for (auto& b : gens) words.push_back(a * b);
  return words;
}

/// Orthonormal coordinate mask of the span of rho^T over the spanning states
/// on `nq` qubits (products of single-qubit states).
inline std::vector<int> state_span_mask(int nq) {
  auto singles = spanning_states();
  std::vector<CMat> group = {CMat::Identity(1, 1)};
  for (int q = 0; q < nq; ++q) {
    std::vector<CMat> next;
    for (auto& g : group)
      for (auto& s : singles) next.push_back(qsys::kron(g, s));
    group = next;
  }
  const SystemLayout lay = dummy_qubits(nq);
  qsys::RMat rows(static_cast<int>(group.size()), lay.total_dim() * lay.total_dim());
  for (size_t i = 0; i < group.size(); ++i)
    rows.row(static_cast<int>(i)) = qsys::to_coords(group[i].transpose(), lay).transpose();
  return qsys::mask_of_projector(qsys::row_space(rows).basis);
}

/// CPTP Choi operators spanning the channel span: unitary Chois of the
/// one- and two-letter words (these alone only reach the 10 directions with
/// non-identity output Pauli content correlated to the input) plus
/// trash-and-reprepare channels 1 (x) sigma, which supply the remaining
/// identity-input directions.
inline std::vector<CMat> spanning_channel_chois() {
  std::vector<CMat> chois;
  for (auto& u : spanning_unitaries()) chois.push_back(choi::choi_of_unitary(u).mat);
  for (auto& s : spanning_states()) chois.push_back(qsys::kron(CMat::Identity(2, 2), s));
  return chois;
}

/// Coordinate mask of the span of C^T over the spanning CPTP Choi operators
/// (qubit to qubit).
inline std::vector<int> choi_span_mask() {
  auto cs = spanning_channel_chois();
  const SystemLayout lay = dummy_qubits(2);
  qsys::RMat rows(static_cast<int>(cs.size()), 16);
  for (size_t i = 0; i < cs.size(); ++i)
    rows.row(static_cast<int>(i)) = qsys::to_coords(cs[i].transpose(), lay).transpose();
  return qsys::mask_of_projector(qsys::row_space(rows).basis);
}

inline std::vector<int> identity_span_mask(int nq) {
  const SystemLayout lay = dummy_qubits(nq);
  const int d = lay.total_dim();
  qsys::RMat rows(1, d * d);
  rows.row(0) = qsys::to_coords(CMat::Identity(d, d), lay).transpose();
  return qsys::mask_of_projector(qsys::row_space(rows).basis);
}

}  // namespace detail

inline std::shared_ptr<const ValiditySubspace> validity_projector(const SystemLayout& layout) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const ValiditySubspace>> cache;

  int n_past = 0, n_future = 0;
  for (auto& [l, d] : layout.factors) {
    if (l == SysLabel::Pc || l == SysLabel::Pt) ++n_past;
    if (l == SysLabel::Fc || l == SysLabel::Ft) ++n_future;
  }
  // Past factors lead, then (A_in, A_out, B_in, B_out), then future factors.
  SystemLayout expect;
  if (n_past == 2) expect.factors.emplace_back(SysLabel::Pc, 2);
  expect.factors.emplace_back(SysLabel::Pt, 2);
  for (auto l : {SysLabel::Ain, SysLabel::Aout, SysLabel::Bin, SysLabel::Bout})
    expect.factors.emplace_back(l, 2);
  if (n_future == 2 || layout.has(SysLabel::Fc)) expect.factors.emplace_back(SysLabel::Fc, 2);
  if (layout.has(SysLabel::Ft)) expect.factors.emplace_back(SysLabel::Ft, 2);
  if (!(layout == expect))
    throw std::invalid_argument("validity_projector: unsupported layout");

  std::scoped_lock lock(mu);
  const int key = layout.factor_count();
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  auto sub = std::make_shared<ValiditySubspace>();
  sub->layout = layout;

  const auto mask_p = detail::state_span_mask(n_past);
  const auto mask_ch = detail::choi_span_mask();
  const auto mask_f = detail::identity_span_mask(n_future);

  const int wp = 1 << (2 * n_past);
  const int wf = 1 << (2 * n_future);
  for (int p : mask_p)
    for (int a : mask_ch)
      for (int b : mask_ch)
        for (int f : mask_f)
          sub->constrained.push_back(((p * 16 + a) * 16 + b) * wf + f);
  std::sort(sub->constrained.begin(), sub->constrained.end());
  (void)wp;

  const int dd = layout.total_dim() * layout.total_dim();
  sub->is_constrained.assign(static_cast<size_t>(dd), 0);
  for (int s : sub->constrained) sub->is_constrained[static_cast<size_t>(s)] = 1;
  sub->dim = dd - static_cast<int>(sub->constrained.size());

  if (sub->constrained.empty() || sub->constrained[0] != 0)
    throw std::runtime_error("validity_projector: identity direction missing from constraint span");

  cache[key] = sub;
  return sub;
}

// ---------------------------------------------------------------------------
// Process checks
// ---------------------------------------------------------------------------

struct ProcessCheck {
  double min_eigenvalue = 0.0;
  double trace_error = 0.0;
  double validity_residual = 0.0;

  bool ok(double psd_tol = 1e-9, double trace_tol = 1e-9, double validity_tol = 1e-8) const {
    return min_eigenvalue >= -psd_tol && std::abs(trace_error) <= trace_tol &&
           validity_residual <= validity_tol;
  }
};

inline ProcessCheck check_process(const ProcessMatrix& w) {
  ProcessCheck c;
  c.min_eigenvalue = qsys::min_eigenvalue(w.mat);
  c.trace_error = w.trace() - expected_trace(w.layout);
  c.validity_residual = validity_projector(w.layout)->residual(w.mat);
  return c;
}

// ---------------------------------------------------------------------------
// Comb membership
// ---------------------------------------------------------------------------

struct CombReport {
  CausalOrder order;
  std::array<double, 3> residuals{};  // Frobenius norms of the trace-replacement residuals
  double tol = 0.0;
  bool pass = false;
};

namespace detail {

inline std::vector<SysLabel> all_but(const SystemLayout& layout, const std::vector<SysLabel>& drop) {
  std::vector<SysLabel> keep;
  for (auto& [l, d] : layout.factors) {
    bool dropped = false;
    for (auto x : drop) dropped = dropped || (x == l);
    if (!dropped) keep.push_back(l);
  }
  return keep;
}

/// Frobenius norm of Tr_T(W) - Tr_{T u {r}}(W) (x) 1_r / d_r.
inline double trace_replace_residual(const CMat& w, const SystemLayout& layout,
                                     SysLabel replaced, std::vector<SysLabel> traced) {
  auto keep_lhs = all_but(layout, traced);
  CMat lhs = qsys::partial_trace(w, layout, keep_lhs);
  SystemLayout lhs_layout = qsys::kept_layout(layout, keep_lhs);

  traced.push_back(replaced);
  auto keep_rhs = all_but(layout, traced);
  CMat small = qsys::partial_trace(w, layout, keep_rhs);
  const int dr = layout.dim_of(replaced);
  CMat rhs = qsys::kron(small, CMat::Identity(dr, dr) / dr);
  SystemLayout rhs_layout = qsys::kept_layout(layout, keep_rhs);
  rhs_layout.factors.emplace_back(replaced, dr);
  rhs = qsys::reorder_factors(rhs, rhs_layout, lhs_layout);

  return (lhs - rhs).norm();
}

}  // namespace detail

/// Evaluates the three trace-replacement conditions characterizing processes
/// causally ordered with `order` on the simplified layout.
inline CombReport comb_membership(const ProcessMatrix& w, CausalOrder order, double tol = 1e-9) {
  if (!(w.layout == SystemLayout::simplified_switch()))
    throw std::invalid_argument("comb_membership: simplified layout required");
  const SysLabel first_out = (order == CausalOrder::AThenB) ? SysLabel::Aout : SysLabel::Bout;
  const SysLabel second_in = (order == CausalOrder::AThenB) ? SysLabel::Bin : SysLabel::Ain;
  const SysLabel second_out = (order == CausalOrder::AThenB) ? SysLabel::Bout : SysLabel::Aout;

  CombReport r;
  r.order = order;
  r.tol = tol;
  r.residuals[0] = detail::trace_replace_residual(w.mat, w.layout, second_out, {SysLabel::Fc});
  r.residuals[1] =
      detail::trace_replace_residual(w.mat, w.layout, first_out, {second_in, second_out, SysLabel::Fc});
  r.residuals[2] = detail::trace_replace_residual(
      w.mat, w.layout, SysLabel::Pt,
      {SysLabel::Ain, SysLabel::Aout, SysLabel::Bin, SysLabel::Bout, SysLabel::Fc});
  r.pass = r.residuals[0] <= tol && r.residuals[1] <= tol && r.residuals[2] <= tol;
  return r;
}

// ---------------------------------------------------------------------------
// Random processes (combs, separable mixtures, generic valid processes)
// ---------------------------------------------------------------------------

namespace detail {

inline CMat random_unitary2(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMat m(2, 2);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) m(r, c) = Complex(g(rng), g(rng));
  Eigen::HouseholderQR<CMat> qr(m);
  CMat q = qr.householderQ();
  CMat rm = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < 2; ++i) q.col(i) *= rm(i, i) / std::abs(rm(i, i));
  return q;
}

}  // namespace detail

/// Rank-1 causally ordered process from a random sequential unitary circuit.
inline ProcessMatrix random_comb(CausalOrder order, std::mt19937_64& rng) {
  const CVec v1 = choi::choi_vector_of_unitary(detail::random_unitary2(rng));
  const CVec v2 = choi::choi_vector_of_unitary(detail::random_unitary2(rng));
  const CVec v3 = choi::choi_vector_of_unitary(detail::random_unitary2(rng));
  CVec v = qsys::kron_vec(qsys::kron_vec(v1, v2), v3);
  SystemLayout natural, canonical = SystemLayout::simplified_switch();
  if (order == CausalOrder::AThenB) {
    natural = canonical;
  } else {
    natural = {{{SysLabel::Pt, 2},
                {SysLabel::Bin, 2},
                {SysLabel::Bout, 2},
                {SysLabel::Ain, 2},
                {SysLabel::Aout, 2},
                {SysLabel::Fc, 2}}};
  }
  CVec w = qsys::reorder_factors_vec(v, natural, canonical);
  return {w * w.adjoint(), canonical};
}

/// Convex mixture of random combs of both orders.
inline ProcessMatrix random_causally_separable(std::mt19937_64& rng, int terms_per_order = 2) {
  auto u01 = [&rng] { return (rng() >> 11) * 0x1.0p-53; };
  const SystemLayout lay = SystemLayout::simplified_switch();
  CMat acc = CMat::Zero(64, 64);
  double p = u01();
  for (int order = 0; order < 2; ++order) {
    double weight_order = order == 0 ? p : 1.0 - p;
    RVec mix(terms_per_order);
    for (int t = 0; t < terms_per_order; ++t) mix(t) = u01() + 1e-3;
    mix /= mix.sum();
    for (int t = 0; t < terms_per_order; ++t)
      acc += weight_order * mix(t) *
             random_comb(order == 0 ? CausalOrder::AThenB : CausalOrder::BThenA, rng).mat;
  }
  return {acc, lay};
}

/// Generic random valid process via alternating projections onto the valid
/// affine subspace and the PSD cone, started from a noise-dominated seed.
inline ProcessMatrix random_valid_process(std::mt19937_64& rng, double spread = 0.35,
                                          int max_iter = 400) {
  const SystemLayout lay = SystemLayout::simplified_switch();
  auto sub = validity_projector(lay);
  std::normal_distribution<double> g(0.0, 1.0);
  CMat m(64, 64);
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 64; ++c) m(r, c) = Complex(g(rng), g(rng));
  CMat w = white_noise_process(lay).mat + spread / 64.0 * (m + m.adjoint());
  for (int it = 0; it < max_iter; ++it) {
    w = sub->project(w);
    CMat p = qsys::psd_project(w);
    double gap = (p - w).norm();
    w = p;
    if (gap < 1e-11 && sub->residual(w) < 1e-11) break;
  }
  return {sub->project(qsys::psd_project(w)), lay};
}

// ---------------------------------------------------------------------------
// Named presets (CLI)
// ---------------------------------------------------------------------------

inline ProcessMatrix preset_process(const std::string& name) {
  if (name == "switch-y-") return switch_simplified(qsys::ket_yminus());
  if (name == "switch-plus") return switch_simplified(qsys::ket_plus());
  if (name == "comb-ab") return comb_process(CausalOrder::AThenB);
  if (name == "comb-ba") return comb_process(CausalOrder::BThenA);
  if (name == "white-noise") return white_noise_process();
  throw std::invalid_argument("unknown process preset: " + name);
}

inline std::vector<std::string> preset_names() {
  return {"switch-y-", "switch-plus", "comb-ab", "comb-ba", "white-noise"};
}

}  // namespace switchtomo::procmat
