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

#include <cstdint>
#include <ostream>

#include "switchtomo/choi.hpp"
#include "switchtomo/procmat.hpp"
#include "switchtomo/qsys.hpp"

namespace switchtomo::tomoset {

using procmat::ProcessMatrix;
using qsys::CMat;
using qsys::Complex;
using qsys::CVec;
using qsys::RMat;
using qsys::RVec;
using qsys::SystemLayout;

// ---------------------------------------------------------------------------
// Setting indices and families
// ---------------------------------------------------------------------------

enum class SettingFamily { Full, Restricted };

inline const char* to_string(SettingFamily f) {
  return f == SettingFamily::Full ? "full" : "restricted";
}

inline SettingFamily family_from_string(const std::string& s) {
  if (s == "full") return SettingFamily::Full;
  if (s == "restricted") return SettingFamily::Restricted;
  throw std::invalid_argument("unknown setting family: " + s);
}

/// Number of future measurement choices z.
inline int future_basis_count(SettingFamily f) { return f == SettingFamily::Full ? 3 : 2; }

/// One experimental configuration: outcomes (a,b,c), instrument choices
/// x=(jA,kA) and y=(jB,kB), future basis z, past state w. All 1-based.
struct SettingIndex {
  int a = 1, b = 1, c = 1;
  int jA = 1, kA = 1;
  int jB = 1, kB = 1;
  int z = 1;
  int w = 1;

  bool operator==(const SettingIndex&) const = default;
};

inline void check_index(const SettingIndex& s, SettingFamily f) {
  auto in = [](int v, int lo, int hi) { return v >= lo && v <= hi; };
  if (!in(s.a, 1, 2) || !in(s.b, 1, 2) || !in(s.c, 1, 2) || !in(s.jA, 1, 3) || !in(s.kA, 1, 4) ||
      !in(s.jB, 1, 3) || !in(s.kB, 1, 4) || !in(s.w, 1, 4) || !in(s.z, 1, future_basis_count(f)))
    throw std::out_of_range("setting index out of range for family");
}

/// Settings per family: 4*24*24*6 = 13824 (full), 24*24*4*4 = 9216 (restricted).
inline int family_size(SettingFamily f) { return f == SettingFamily::Full ? 13824 : 9216; }

/// Normalization groups (x,y,z,w), eight joint outcomes each.
inline int group_count(SettingFamily f) { return family_size(f) / 8; }

/// Experimental configurations when both c outcomes are read simultaneously.
inline int configuration_count(SettingFamily f) { return family_size(f) / 2; }

/// Lexicographic enumeration of the tuple (w, x=(jA,kA), y=(jB,kB), z, a, b, c).
inline int linear_index(const SettingIndex& s, SettingFamily f) {
  check_index(s, f);
  const int nz = future_basis_count(f);
  int x = (s.jA - 1) * 4 + (s.kA - 1);
  int y = (s.jB - 1) * 4 + (s.kB - 1);
  int idx = s.w - 1;
  idx = idx * 12 + x;
  idx = idx * 12 + y;
  idx = idx * nz + (s.z - 1);
  idx = idx * 2 + (s.a - 1);
  idx = idx * 2 + (s.b - 1);
  idx = idx * 2 + (s.c - 1);
  return idx;
}

inline SettingIndex index_from_linear(int idx, SettingFamily f) {
  if (idx < 0 || idx >= family_size(f)) throw std::out_of_range("linear setting index out of range");
  const int nz = future_basis_count(f);
  SettingIndex s;
  s.c = idx % 2 + 1;
  idx /= 2;
  s.b = idx % 2 + 1;
  idx /= 2;
  s.a = idx % 2 + 1;
  idx /= 2;
  s.z = idx % nz + 1;
  idx /= nz;
  int y = idx % 12;
  idx /= 12;
  int x = idx % 12;
  idx /= 12;
  s.w = idx + 1;
  s.jA = x / 4 + 1;
  s.kA = x % 4 + 1;
  s.jB = y / 4 + 1;
  s.kB = y % 4 + 1;
  return s;
}

/// Group id shared by the 8 joint outcomes of one (x,y,z,w) configuration
/// family; linear_index = group_id * 8 + outcome offset.
inline int group_id(const SettingIndex& s, SettingFamily f) { return linear_index(s, f) / 8; }

// ---------------------------------------------------------------------------
// Waveplate calculus
// ---------------------------------------------------------------------------
//
// Jones matrices with fast axis at angle theta from horizontal. A preparation
// stage sends |0> through a quarter- then a half-waveplate; a measurement
// stage is a quarter- then a half-waveplate in front of a polarizer
// transmitting |0>.

inline CMat waveplate_rotation(double theta_rad) {
  CMat r(2, 2);
  r << std::cos(theta_rad), -std::sin(theta_rad), std::sin(theta_rad), std::cos(theta_rad);
  return r;
}

inline CMat qwp(double deg) {
  const double th = deg * M_PI / 180.0;
  CMat d = CMat::Zero(2, 2);
  d(0, 0) = 1;
  d(1, 1) = Complex(0, -1);
  return waveplate_rotation(th) * d * waveplate_rotation(-th);
}

inline CMat hwp(double deg) {
  const double th = deg * M_PI / 180.0;
  CMat d = CMat::Zero(2, 2);
  d(0, 0) = 1;
  d(1, 1) = -1;
  return waveplate_rotation(th) * d * waveplate_rotation(-th);
}

inline CVec prep_ket(double qwp_deg, double hwp_deg) {
  return hwp(hwp_deg) * (qwp(qwp_deg) * qsys::ket0());
}

inline CVec measure_ket(double qwp_deg, double hwp_deg) {
  return qwp(qwp_deg).adjoint() * (hwp(hwp_deg).adjoint() * qsys::ket0());
}

// ---------------------------------------------------------------------------
// Tomographic fixtures
// ---------------------------------------------------------------------------

struct WaveplatePair {
  double qwp_deg = 0.0;
  double hwp_deg = 0.0;
};

/// States, measurement effects, repreparations and future effects of one
/// setting family, with the waveplate angles realizing them.
struct Fixtures {
  SettingFamily family;
  std::array<CMat, 4> states;                          // psi_w, rank-1 projectors
  std::array<WaveplatePair, 4> state_angles;
  std::array<std::array<CMat, 2>, 3> effects;          // [j-1][i-1]
  std::array<std::array<WaveplatePair, 2>, 3> effect_angles;
  std::array<CMat, 4> repreps;                         // phi_k, rank-1 projectors
  std::array<WaveplatePair, 4> reprep_angles;
  std::vector<std::array<CMat, 2>> future;             // [z-1][c-1]
};

namespace detail {

inline Fixtures make_full_fixtures() {
  Fixtures f;
  f.family = SettingFamily::Full;
  f.state_angles = {{{0, 0}, {0, 45}, {0, 22.5}, {-45, 0}}};          // |0>,|1>,|+>,|y+>
  f.effect_angles = {{{{{0, 0}, {0, 45}}},                            // Z: |0><0|, |1><1|
                      {{{45, 22.5}, {45, 67.5}}},                     // X: |+><+|, |-><-|
                      {{{45, 45}, {45, 0}}}}};                        // Y: |y+><y+|, |y-><y-|
  f.reprep_angles = f.state_angles;
  for (int w = 0; w < 4; ++w) {
    f.states[static_cast<size_t>(w)] =
        qsys::proj(prep_ket(f.state_angles[static_cast<size_t>(w)].qwp_deg, f.state_angles[static_cast<size_t>(w)].hwp_deg));
    f.repreps[static_cast<size_t>(w)] = f.states[static_cast<size_t>(w)];
  }
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 2; ++i)
      f.effects[static_cast<size_t>(j)][static_cast<size_t>(i)] = qsys::proj(measure_ket(
          f.effect_angles[static_cast<size_t>(j)][static_cast<size_t>(i)].qwp_deg,
          f.effect_angles[static_cast<size_t>(j)][static_cast<size_t>(i)].hwp_deg));
  // Future control measured in the Z, X, Y eigenbases.
  f.future.push_back({qsys::proj(qsys::ket0()), qsys::proj(qsys::ket1())});
  f.future.push_back({qsys::proj(qsys::ket_plus()), qsys::proj(qsys::ket_minus())});
  f.future.push_back({qsys::proj(qsys::ket_yplus()), qsys::proj(qsys::ket_yminus())});
  return f;
}

inline Fixtures make_restricted_fixtures() {
  Fixtures f;
  f.family = SettingFamily::Restricted;
  f.state_angles = {{{0, 0}, {0, -45}, {0, -22.5}, {-45, 0}}};        // |0>,|1>,|->,|y+>
  f.effect_angles = {{{{{0, 0}, {0, 45}}},                            // Z: |0><0|, |1><1|
                      {{{45, 22.5}, {45, 67.5}}},                     // X: |+><+|, |-><-|
                      {{{45, 0}, {45, 45}}}}};                        // Y: |y-><y-|, |y+><y+|
  f.reprep_angles = {{{0, 0}, {0, 45}, {0, 22.5}, {45, 0}}};          // |0>,|1>,|+>,|y->
  for (int w = 0; w < 4; ++w) {
    f.states[static_cast<size_t>(w)] =
        qsys::proj(prep_ket(f.state_angles[static_cast<size_t>(w)].qwp_deg, f.state_angles[static_cast<size_t>(w)].hwp_deg));
    f.repreps[static_cast<size_t>(w)] =
        qsys::proj(prep_ket(f.reprep_angles[static_cast<size_t>(w)].qwp_deg, f.reprep_angles[static_cast<size_t>(w)].hwp_deg));
  }
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 2; ++i)
      f.effects[static_cast<size_t>(j)][static_cast<size_t>(i)] = qsys::proj(measure_ket(
          f.effect_angles[static_cast<size_t>(j)][static_cast<size_t>(i)].qwp_deg,
          f.effect_angles[static_cast<size_t>(j)][static_cast<size_t>(i)].hwp_deg));
  // Time-bin control read-out: z=1 arrival time (outcome order |1>,|0>),
  // z=2 interferometric Y measurement (outcome order |y->,|y+>).
  f.future.push_back({qsys::proj(qsys::ket1()), qsys::proj(qsys::ket0())});
  f.future.push_back({qsys::proj(qsys::ket_yminus()), qsys::proj(qsys::ket_yplus())});
  return f;
}

}  // namespace detail

inline const Fixtures& fixtures(SettingFamily f) {
  static const Fixtures full = detail::make_full_fixtures();
  static const Fixtures restricted = detail::make_restricted_fixtures();
  return f == SettingFamily::Full ? full : restricted;
}

/// The four tomography input states |0>, |1>, |+>, |y+> as projectors.
inline std::array<CMat, 4> state_set() { return fixtures(SettingFamily::Full).states; }

/// Three dichotomic measurements (Z, X, Y bases); [j-1][i-1] is the effect of
/// outcome i for choice j.
inline std::array<std::array<CMat, 2>, 3> measurement_set() {
  return fixtures(SettingFamily::Full).effects;
}

/// The 24 measure-and-reprepare elements in setting-operator form,
/// M_{i|j} (x) |psi_k><psi_k|^T (the transposed Choi operator).
inline CMat instrument_element(const Fixtures& f, int i, int j, int k) {
  return qsys::kron(f.effects[static_cast<size_t>(j - 1)][static_cast<size_t>(i - 1)],
                    f.repreps[static_cast<size_t>(k - 1)].transpose());
}

inline std::vector<CMat> instrument_set() {
  std::vector<CMat> out;
  const auto& f = fixtures(SettingFamily::Full);
  for (int j = 1; j <= 3; ++j)
    for (int k = 1; k <= 4; ++k)
      for (int i = 1; i <= 2; ++i) out.push_back(instrument_element(f, i, j, k));
  return out;
}

/// Experimentally restricted fixture lists (states, effects, repreparations,
/// control effects).
inline const Fixtures& experimental_sets() { return fixtures(SettingFamily::Restricted); }

// ---------------------------------------------------------------------------
// Setting operators and the generalized Born rule
// ---------------------------------------------------------------------------

/// Product setting operator on the simplified-switch layout:
/// (psi_w^T) (x) A-element (x) B-element (x) future effect.
inline CMat setting_operator(const SettingIndex& s, SettingFamily fam) {
  check_index(s, fam);
  const auto& f = fixtures(fam);
  CMat a = instrument_element(f, s.a, s.jA, s.kA);
  CMat b = instrument_element(f, s.b, s.jB, s.kB);
  return qsys::kron_all({f.states[static_cast<size_t>(s.w - 1)].transpose(), a, b,
                         f.future[static_cast<size_t>(s.z - 1)][static_cast<size_t>(s.c - 1)]});
}

/// Generalized Born rule with explicit slot operators:
/// Tr(W (rho (x) A (x) B)^T (x) M), with A, B Choi operators.
inline double generalized_born(const ProcessMatrix& w, const CMat& rho, const CMat& choi_a,
                               const CMat& choi_b, const CMat& effect_f) {
  CMat s = qsys::kron_all(
      {rho.transpose(), choi_a.transpose(), choi_b.transpose(), effect_f});
  return qsys::trace_inner(w.mat, s).real();
}

/// Born probability of one setting; clamped to [0,1] after a small-tolerance
/// sanity window.
inline double born_probability(const ProcessMatrix& w, const SettingIndex& s, SettingFamily fam) {
  double p = qsys::trace_inner(w.mat, setting_operator(s, fam)).real();
  return std::min(1.0, std::max(0.0, p));
}

// ---------------------------------------------------------------------------
// Born matrix
// ---------------------------------------------------------------------------
//
// The map from Hermitian coordinates of W to the probability vector over all
// settings. Setting operators are products, so the matrix is a Kronecker
// product of per-slot coordinate blocks; it is stored in that factored form
// and applied by successive mode contractions. Rows are materialized on
// demand (the fully materialized matrix would be ~0.45 GB for the full
// family).

class BornMatrix {
 public:
  BornMatrix(SettingFamily fam, const SystemLayout& layout) : family_(fam), layout_(layout) {
    if (!(layout == SystemLayout::simplified_switch()))
      throw std::invalid_argument("BornMatrix: simplified layout required");
    const auto& f = fixtures(fam);
    const SystemLayout q1 = procmat::detail::dummy_qubits(1);
    const SystemLayout q2 = procmat::detail::dummy_qubits(2);

    bp_.resize(4, 4);
    for (int w = 0; w < 4; ++w)
      bp_.row(w) = qsys::to_coords(f.states[static_cast<size_t>(w)].transpose(), q1).transpose();

    ba_.resize(24, 16);
    for (int x = 0; x < 12; ++x) {
      for (int i = 0; i < 2; ++i) {
        CMat el = instrument_element(f, i + 1, x / 4 + 1, x % 4 + 1);
        ba_.row(2 * x + i) = qsys::to_coords(el, q2).transpose();
      }
    }
    bb_ = ba_;

    const int nz = future_basis_count(fam);
    bf_.resize(2 * nz, 4);
    for (int z = 0; z < nz; ++z)
      for (int c = 0; c < 2; ++c)
        bf_.row(2 * z + c) =
            qsys::to_coords(f.future[static_cast<size_t>(z)][static_cast<size_t>(c)], q1).transpose();

    // Permutation from tensor order (w, eA, eB, eF) to the lexicographic
    // linear setting order (w, x, y, z, a, b, c).
    const int n = family_size(fam);
    perm_.resize(static_cast<size_t>(n));
    for (int lin = 0; lin < n; ++lin) {
      SettingIndex s = index_from_linear(lin, fam);
      int ea = ((s.jA - 1) * 4 + (s.kA - 1)) * 2 + (s.a - 1);
      int eb = ((s.jB - 1) * 4 + (s.kB - 1)) * 2 + (s.b - 1);
      int ef = (s.z - 1) * 2 + (s.c - 1);
      perm_[static_cast<size_t>(lin)] = ((s.w - 1) * 24 + ea) * 24 * 2 * nz + eb * 2 * nz + ef;
    }
  }

  SettingFamily family() const { return family_; }
  int rows() const { return family_size(family_); }

  using RMatRow = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  /// Probabilities (unclamped) for all settings from W's coordinates.
  /// Coordinate digits are (p, a, b, f) with p most significant, so the
  /// intermediate tensors are kept row-major.
  RVec apply(const RVec& coords) const {
    const int nf = static_cast<int>(bf_.rows());
    Eigen::Map<const RMatRow> t0(coords.data(), 4, 1024);  // p x (a,b,f)
    RMatRow t1 = bp_ * t0;                                 // w x (a,b,f)
    RMatRow t2(96, 64);                                    // (w,eA) x (b,f)
    for (int w = 0; w < 4; ++w) {
      Eigen::Map<const RMatRow> slice(t1.data() + w * 1024, 16, 64);
      t2.middleRows(w * 24, 24) = ba_ * slice;
    }
    RMatRow t3(2304, 4);  // (w,eA,eB) x f
    for (int r = 0; r < 96; ++r) {
      Eigen::Map<const RMatRow> slice(t2.data() + r * 64, 16, 4);
      t3.middleRows(r * 24, 24) = bb_ * slice;
    }
    RMatRow t4 = t3 * bf_.transpose();  // (w,eA,eB) x eF
    RVec out(rows());
    for (int lin = 0; lin < rows(); ++lin) {
      int t = perm_[static_cast<size_t>(lin)];
      out(lin) = t4(t / nf, t % nf);
    }
    return out;
  }

  /// Adjoint map from a settings vector back to Hermitian coordinates.
  RVec apply_adjoint(const RVec& v) const {
    const int nf = static_cast<int>(bf_.rows());
    RMatRow t4 = RMatRow::Zero(2304, nf);
    for (int lin = 0; lin < rows(); ++lin) {
      int t = perm_[static_cast<size_t>(lin)];
      t4(t / nf, t % nf) += v(lin);
    }
    RMatRow t3 = t4 * bf_;  // (w,eA,eB) x f
    RMatRow t2(96, 64);
    for (int r = 0; r < 96; ++r) {
      RMatRow block = bb_.transpose() * t3.middleRows(r * 24, 24);  // b x f
      t2.row(r) = Eigen::Map<const Eigen::RowVectorXd>(block.data(), 64);
    }
    RMatRow t1(4, 1024);
    for (int w = 0; w < 4; ++w) {
      RMatRow block = ba_.transpose() * t2.middleRows(w * 24, 24);  // a x (b,f)
      t1.row(w) = Eigen::Map<const Eigen::RowVectorXd>(block.data(), 1024);
    }
    RMatRow t0 = bp_.transpose() * t1;  // p x (a,b,f)
    RVec out(4096);
    std::copy(t0.data(), t0.data() + 4096, out.data());
    return out;
  }

  /// Applies mp (x) ma (x) mb (x) mf (square per-slot blocks) to a
  /// coordinate vector.
  static RVec kron_square_apply(const RMat& mp, const RMat& ma, const RMat& mb, const RMat& mf,
                                const RVec& v) {
    Eigen::Map<const RMatRow> t0(v.data(), 4, 1024);
    RMatRow t1 = mp * t0;
    RMatRow t2(64, 64);
    for (int w = 0; w < 4; ++w) {
      Eigen::Map<const RMatRow> slice(t1.data() + w * 1024, 16, 64);
      t2.middleRows(w * 16, 16) = ma * slice;
    }
    RMatRow t3(1024, 4);
    for (int r = 0; r < 64; ++r) {
      Eigen::Map<const RMatRow> slice(t2.data() + r * 64, 16, 4);
      t3.middleRows(r * 16, 16) = mb * slice;
    }
    RMatRow t4 = t3 * mf.transpose();
    RVec out(4096);
    std::copy(t4.data(), t4.data() + 4096, out.data());
    return out;
  }

  /// Minimum-norm expansion coefficients alpha with sum_s alpha_s S_s = G,
  /// for G (in coordinates) inside the span of the setting operators:
  /// alpha = B (B^T B)^+ g with the Gram pseudo-inverse taken slot-wise.
  RVec min_norm_coefficients(const RVec& g) const {
    auto pinv = [](const RMat& m) {
      Eigen::SelfAdjointEigenSolver<RMat> es(m);
      RVec inv = es.eigenvalues();
      const double cut = 1e-10 * std::max(1.0, inv.cwiseAbs().maxCoeff());
      for (int i = 0; i < inv.size(); ++i) inv(i) = std::abs(inv(i)) > cut ? 1.0 / inv(i) : 0.0;
      return RMat(es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose());
    };
    return apply(kron_square_apply(pinv(gram_p()), pinv(gram_a()), pinv(gram_b()), pinv(gram_f()), g));
  }

  /// One row of the Born matrix (coordinates of the setting operator).
  RVec row(int linear) const {
    SettingIndex s = index_from_linear(linear, family_);
    return qsys::to_coords(setting_operator(s, family_), layout_);
  }

  /// Contiguous row chunk, materialized on demand.
  RMat rows_chunk(int start, int count) const {
    RMat out(count, 4096);
    for (int i = 0; i < count; ++i) out.row(i) = row(start + i).transpose();
    return out;
  }

  /// Per-slot Gram matrices of B^T B = G_p (x) G_a (x) G_b (x) G_f.
  RMat gram_p() const { return bp_.transpose() * bp_; }
  RMat gram_a() const { return ba_.transpose() * ba_; }
  RMat gram_b() const { return bb_.transpose() * bb_; }
  RMat gram_f() const { return bf_.transpose() * bf_; }

  const RMat& block_p() const { return bp_; }
  const RMat& block_a() const { return ba_; }
  const RMat& block_b() const { return bb_; }
  const RMat& block_f() const { return bf_; }

 private:
  SettingFamily family_;
  SystemLayout layout_;
  RMat bp_, ba_, bb_, bf_;
  std::vector<int> perm_;
};

inline const BornMatrix& born_matrix(SettingFamily fam,
                                     const SystemLayout& layout = SystemLayout::simplified_switch()) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<BornMatrix>> cache;
  std::scoped_lock lock(mu);
  auto& slot = cache[fam == SettingFamily::Full ? 0 : 1];
  if (!slot) slot = std::make_unique<BornMatrix>(fam, layout);
  return *slot;
}

/// Exact Born probabilities of a process for every setting, clamped to [0,1].
inline RVec exact_probabilities(const ProcessMatrix& w, SettingFamily fam) {
  RVec p = born_matrix(fam).apply(qsys::to_coords(w.mat, w.layout));
  for (int i = 0; i < p.size(); ++i) p(i) = std::min(1.0, std::max(0.0, p(i)));
  return p;
}

// ---------------------------------------------------------------------------
// Settings export
// ---------------------------------------------------------------------------

/// FNV-1a hash of the setting operator entries rounded at 1e-9, for
/// cross-implementation comparison of conventions.
inline std::uint64_t operator_hash(const CMat& m) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::int64_t v) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= static_cast<std::uint64_t>(v >> (8 * byte)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      mix(std::llround(m(r, c).real() * 1e9));
      mix(std::llround(m(r, c).imag() * 1e9));
    }
  }
  return h;
}

inline void write_settings_csv(std::ostream& os, SettingFamily fam) {
  os << "index,w,jA,kA,jB,kB,z,a,b,c,operator_hash\n";
  for (int lin = 0; lin < family_size(fam); ++lin) {
    SettingIndex s = index_from_linear(lin, fam);
    os << lin << ',' << s.w << ',' << s.jA << ',' << s.kA << ',' << s.jB << ',' << s.kB << ','
       << s.z << ',' << s.a << ',' << s.b << ',' << s.c << ','
       << operator_hash(setting_operator(s, fam)) << '\n';
  }
}

}  // namespace switchtomo::tomoset
