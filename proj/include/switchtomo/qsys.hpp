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

#include <array>
#include <complex>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace switchtomo::qsys {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double kHermTol = 1e-12;

// ---------------------------------------------------------------------------
// System layouts
// ---------------------------------------------------------------------------

/// Tensor factor labels for the switch scenario. Order in a layout is
/// significant: the leftmost factor is the most significant index.
enum class SysLabel : std::uint8_t { Pc, Pt, Ain, Aout, Bin, Bout, Fc, Ft };

inline const char* to_string(SysLabel l) {
  switch (l) {
    case SysLabel::Pc: return "P_c";
    case SysLabel::Pt: return "P_t";
    case SysLabel::Ain: return "A_in";
    case SysLabel::Aout: return "A_out";
    case SysLabel::Bin: return "B_in";
    case SysLabel::Bout: return "B_out";
    case SysLabel::Fc: return "F_c";
    case SysLabel::Ft: return "F_t";
  }
  throw std::invalid_argument("unknown system label");
}

inline SysLabel label_from_string(const std::string& s) {
  for (auto l : {SysLabel::Pc, SysLabel::Pt, SysLabel::Ain, SysLabel::Aout,
                 SysLabel::Bin, SysLabel::Bout, SysLabel::Fc, SysLabel::Ft}) {
    if (s == to_string(l)) return l;
  }
  throw std::invalid_argument("unknown system label: " + s);
}

/// An ordered list of labeled tensor factors with dimensions.
struct SystemLayout {
  std::vector<std::pair<SysLabel, int>> factors;

  int total_dim() const {
    int d = 1;
    for (auto& [l, dim] : factors) d *= dim;
    return d;
  }

  int factor_count() const { return static_cast<int>(factors.size()); }

  bool has(SysLabel l) const { return position_or(l) >= 0; }

  int position(SysLabel l) const {
    int p = position_or(l);
    if (p < 0) throw std::invalid_argument(std::string("layout has no factor ") + to_string(l));
    return p;
  }

  int dim_of(SysLabel l) const { return factors[position(l)].second; }

  bool all_qubits() const {
    for (auto& [l, d] : factors)
      if (d != 2) return false;
    return true;
  }

  bool operator==(const SystemLayout& o) const { return factors == o.factors; }

  /// (P_t, A_in, A_out, B_in, B_out, F_c), all qubits. Total dimension 64.
  static SystemLayout simplified_switch() {
    return {{{SysLabel::Pt, 2},
             {SysLabel::Ain, 2},
             {SysLabel::Aout, 2},
             {SysLabel::Bin, 2},
             {SysLabel::Bout, 2},
             {SysLabel::Fc, 2}}};
  }

  /// n generic qubit factors; used where only dimensions matter (coordinate
  /// transforms, cone blocks).
  static SystemLayout qubits(int n) {
    const SysLabel labels[] = {SysLabel::Pc, SysLabel::Pt, SysLabel::Ain, SysLabel::Aout,
                               SysLabel::Bin, SysLabel::Bout, SysLabel::Fc, SysLabel::Ft};
    SystemLayout lay;
    for (int i = 0; i < n; ++i) lay.factors.emplace_back(labels[i % 8], 2);
    return lay;
  }

  /// (P_c, P_t, A_in, A_out, B_in, B_out, F_c, F_t). Total dimension 256.
  static SystemLayout full_switch() {
    return {{{SysLabel::Pc, 2},
             {SysLabel::Pt, 2},
             {SysLabel::Ain, 2},
             {SysLabel::Aout, 2},
             {SysLabel::Bin, 2},
             {SysLabel::Bout, 2},
             {SysLabel::Fc, 2},
             {SysLabel::Ft, 2}}};
  }

 private:
  int position_or(SysLabel l) const {
    for (size_t i = 0; i < factors.size(); ++i)
      if (factors[i].first == l) return static_cast<int>(i);
    return -1;
  }
};

// ---------------------------------------------------------------------------
// Qubit constants
// ---------------------------------------------------------------------------

/// Pauli matrices, indexed I=0, X=1, Y=2, Z=3.
inline const CMat& pauli(int i) {
  static const std::array<CMat, 4> ps = [] {
    std::array<CMat, 4> p;
    const Complex im(0.0, 1.0);
    p[0] = CMat::Identity(2, 2);
    p[1] = CMat::Zero(2, 2);
    p[1] << 0, 1, 1, 0;
    p[2] = CMat::Zero(2, 2);
    p[2] << 0, -im, im, 0;
    p[3] = CMat::Zero(2, 2);
    p[3] << 1, 0, 0, -1;
    return p;
  }();
  if (i < 0 || i > 3) throw std::invalid_argument("pauli index out of range");
  return ps[static_cast<size_t>(i)];
}

inline CVec ket0() { return (CVec(2) << 1, 0).finished(); }
inline CVec ket1() { return (CVec(2) << 0, 1).finished(); }
inline CVec ket_plus() { return (CVec(2) << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0)).finished(); }
inline CVec ket_minus() { return (CVec(2) << 1 / std::sqrt(2.0), -1 / std::sqrt(2.0)).finished(); }
inline CVec ket_yplus() {
  return (CVec(2) << 1 / std::sqrt(2.0), Complex(0, 1) / std::sqrt(2.0)).finished();
}
inline CVec ket_yminus() {
  return (CVec(2) << 1 / std::sqrt(2.0), Complex(0, -1) / std::sqrt(2.0)).finished();
}

inline CMat proj(const CVec& v) { return v * v.adjoint(); }

// ---------------------------------------------------------------------------
// Basic matrix predicates
// ---------------------------------------------------------------------------

inline double max_abs(const CMat& m) { return m.cwiseAbs().maxCoeff(); }

inline bool is_hermitian(const CMat& m, double tol = kHermTol) {
  if (m.rows() != m.cols()) return false;
  return max_abs(m - m.adjoint()) <= tol * std::max(1.0, max_abs(m));
}

inline void require_hermitian(const CMat& m, double tol, const char* where) {
  if (!is_hermitian(m, tol))
    throw std::invalid_argument(std::string(where) + ": matrix is not Hermitian within tolerance");
}

/// Trace inner product <a,b> = Tr(a^dag b). Real for Hermitian pairs.
inline Complex trace_inner(const CMat& a, const CMat& b) {
  return (a.adjoint() * b).trace();
}

// ---------------------------------------------------------------------------
// Tensor algebra
// ---------------------------------------------------------------------------

/// Kronecker product with the leftmost factor most significant.
inline CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline CMat kron_all(const std::vector<CMat>& ms) {
  if (ms.empty()) throw std::invalid_argument("kron_all: empty factor list");
  CMat out = ms[0];
  for (size_t i = 1; i < ms.size(); ++i) out = kron(out, ms[i]);
  return out;
}

inline CVec kron_vec(const CVec& a, const CVec& b) {
  CVec out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

namespace detail {

inline std::vector<int> dims_of(const SystemLayout& layout) {
  std::vector<int> d;
  d.reserve(layout.factors.size());
  for (auto& [l, dim] : layout.factors) d.push_back(dim);
  return d;
}

inline void check_square_dim(const CMat& m, const SystemLayout& layout, const char* where) {
  if (m.rows() != m.cols() || m.rows() != layout.total_dim())
    throw std::invalid_argument(std::string(where) + ": matrix dimension does not match layout");
}

// Decomposes a flat index into per-factor indices (leftmost most significant).
inline void decode(int idx, const std::vector<int>& dims, std::vector<int>& out) {
  for (int k = static_cast<int>(dims.size()) - 1; k >= 0; --k) {
    out[static_cast<size_t>(k)] = idx % dims[static_cast<size_t>(k)];
    idx /= dims[static_cast<size_t>(k)];
  }
}

inline int encode(const std::vector<int>& digits, const std::vector<int>& dims) {
  int idx = 0;
  for (size_t k = 0; k < dims.size(); ++k) idx = idx * dims[k] + digits[k];
  return idx;
}

}  // namespace detail

/// Traces out every factor not listed in `keep`; the kept factors stay in
/// their original order.
inline CMat partial_trace(const CMat& m, const SystemLayout& layout,
                          const std::vector<SysLabel>& keep) {
  detail::check_square_dim(m, layout, "partial_trace");
  for (auto l : keep) layout.position(l);  // throws on unknown label

  const auto dims = detail::dims_of(layout);
  const int n = layout.factor_count();
  std::vector<bool> keep_mask(static_cast<size_t>(n), false);
  for (auto l : keep) keep_mask[static_cast<size_t>(layout.position(l))] = true;

  int dkeep = 1, dtrace = 1;
  for (int k = 0; k < n; ++k) {
    if (keep_mask[static_cast<size_t>(k)])
      dkeep *= dims[static_cast<size_t>(k)];
    else
      dtrace *= dims[static_cast<size_t>(k)];
  }

  // idx(i, t): full index with kept digits i and traced digits t.
  std::vector<int> full_idx(static_cast<size_t>(dkeep) * static_cast<size_t>(dtrace));
  std::vector<int> digits(static_cast<size_t>(n));
  for (int i = 0; i < dkeep; ++i) {
    for (int t = 0; t < dtrace; ++t) {
      int ii = i, tt = t;
      for (int k = n - 1; k >= 0; --k) {
        if (keep_mask[static_cast<size_t>(k)]) {
          digits[static_cast<size_t>(k)] = ii % dims[static_cast<size_t>(k)];
          ii /= dims[static_cast<size_t>(k)];
        } else {
          digits[static_cast<size_t>(k)] = tt % dims[static_cast<size_t>(k)];
          tt /= dims[static_cast<size_t>(k)];
        }
      }
      full_idx[static_cast<size_t>(i) * static_cast<size_t>(dtrace) + static_cast<size_t>(t)] =
          detail::encode(digits, dims);
    }
  }

  CMat out = CMat::Zero(dkeep, dkeep);
  for (int i = 0; i < dkeep; ++i)
    for (int j = 0; j < dkeep; ++j) {
      Complex acc(0, 0);
      for (int t = 0; t < dtrace; ++t)
        acc += m(full_idx[static_cast<size_t>(i) * static_cast<size_t>(dtrace) + static_cast<size_t>(t)],
                 full_idx[static_cast<size_t>(j) * static_cast<size_t>(dtrace) + static_cast<size_t>(t)]);
      out(i, j) = acc;
    }
  return out;
}

inline SystemLayout kept_layout(const SystemLayout& layout, const std::vector<SysLabel>& keep) {
  SystemLayout out;
  for (auto& [l, d] : layout.factors) {
    for (auto k : keep)
      if (k == l) out.factors.emplace_back(l, d);
  }
  return out;
}

/// Transpose in the computational basis on the listed factors only.
inline CMat partial_transpose(const CMat& m, const SystemLayout& layout,
                              const std::vector<SysLabel>& subset) {
  detail::check_square_dim(m, layout, "partial_transpose");
  const auto dims = detail::dims_of(layout);
  const int n = layout.factor_count();
  std::vector<bool> flip(static_cast<size_t>(n), false);
  for (auto l : subset) flip[static_cast<size_t>(layout.position(l))] = true;

  const int d = layout.total_dim();
  CMat out(d, d);
  std::vector<int> row(static_cast<size_t>(n)), col(static_cast<size_t>(n));
  for (int r = 0; r < d; ++r) {
    detail::decode(r, dims, row);
    for (int c = 0; c < d; ++c) {
      detail::decode(c, dims, col);
      std::vector<int> nr = row, nc = col;
      for (int k = 0; k < n; ++k) {
        if (flip[static_cast<size_t>(k)]) std::swap(nr[static_cast<size_t>(k)], nc[static_cast<size_t>(k)]);
      }
      out(detail::encode(nr, dims), detail::encode(nc, dims)) = m(r, c);
    }
  }
  return out;
}

/// Permutes tensor factors of `m` from `from` order into `to` order.
/// `to` must list exactly the labels of `from`.
inline CMat reorder_factors(const CMat& m, const SystemLayout& from, const SystemLayout& to) {
  detail::check_square_dim(m, from, "reorder_factors");
  if (from.factor_count() != to.factor_count())
    throw std::invalid_argument("reorder_factors: layouts differ in factor count");
  const int n = from.factor_count();
  std::vector<int> src(static_cast<size_t>(n));  // src[k] = position in `from` of to.factors[k]
  for (int k = 0; k < n; ++k) src[static_cast<size_t>(k)] = from.position(to.factors[static_cast<size_t>(k)].first);

  const auto fdims = detail::dims_of(from);
  const auto tdims = detail::dims_of(to);
  const int d = from.total_dim();
  CMat out(d, d);
  std::vector<int> row(static_cast<size_t>(n)), col(static_cast<size_t>(n)), trow(static_cast<size_t>(n)), tcol(static_cast<size_t>(n));
  for (int r = 0; r < d; ++r) {
    detail::decode(r, fdims, row);
    for (int c = 0; c < d; ++c) {
      detail::decode(c, fdims, col);
      for (int k = 0; k < n; ++k) {
        trow[static_cast<size_t>(k)] = row[static_cast<size_t>(src[static_cast<size_t>(k)])];
        tcol[static_cast<size_t>(k)] = col[static_cast<size_t>(src[static_cast<size_t>(k)])];
      }
      out(detail::encode(trow, tdims), detail::encode(tcol, tdims)) = m(r, c);
    }
  }
  return out;
}

inline CVec reorder_factors_vec(const CVec& v, const SystemLayout& from, const SystemLayout& to) {
  if (v.size() != from.total_dim())
    throw std::invalid_argument("reorder_factors_vec: vector dimension does not match layout");
  const int n = from.factor_count();
  std::vector<int> src(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) src[static_cast<size_t>(k)] = from.position(to.factors[static_cast<size_t>(k)].first);
  const auto fdims = detail::dims_of(from);
  const auto tdims = detail::dims_of(to);
  CVec out(v.size());
  std::vector<int> idx(static_cast<size_t>(n)), tidx(static_cast<size_t>(n));
  for (int r = 0; r < v.size(); ++r) {
    detail::decode(r, fdims, idx);
    for (int k = 0; k < n; ++k) tidx[static_cast<size_t>(k)] = idx[static_cast<size_t>(src[static_cast<size_t>(k)])];
    out(detail::encode(tidx, tdims)) = v(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition and PSD projection
// ---------------------------------------------------------------------------

struct HermEig {
  RVec eigenvalues;   // ascending
  CMat eigenvectors;  // columns
};

inline HermEig herm_eig(const CMat& m) {
  require_hermitian(m, 1e-10, "herm_eig");
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (m + m.adjoint()));
  if (es.info() != Eigen::Success) throw std::runtime_error("herm_eig: eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

/// Projects a Hermitian matrix onto the PSD cone by clipping negative
/// eigenvalues at zero.
inline CMat psd_project(const CMat& m) {
  auto [vals, vecs] = herm_eig(m);
  RVec clipped = vals.cwiseMax(0.0);
  return vecs * clipped.asDiagonal() * vecs.adjoint();
}

inline double min_eigenvalue(const CMat& m) {
  return herm_eig(m).eigenvalues(0);
}

// ---------------------------------------------------------------------------
// Hermitian coordinates
// ---------------------------------------------------------------------------
//
// Real parametrization of Hermitian matrices over an all-qubit layout in the
// orthonormal basis of normalized Pauli strings sigma_s / sqrt(d). The string
// digits are base 4 (I=0, X=1, Y=2, Z=3), leftmost factor most significant.

struct HermitianCoords {
  SystemLayout layout;
  RVec coords;  // length d^2
};

namespace detail {

inline void require_qubits(const SystemLayout& layout, const char* where) {
  if (!layout.all_qubits())
    throw std::invalid_argument(std::string(where) + ": coordinates require an all-qubit layout");
}

// Forward 4-point transform on one base-4 digit: (m00,m01,m10,m11) block
// entries to (I,X,Y,Z)/sqrt(2) coefficients.
inline void pauli_digit_forward(Complex& a, Complex& b, Complex& c, Complex& e) {
  const double s = 1.0 / std::sqrt(2.0);
  const Complex im(0.0, 1.0);
  Complex qi = (a + e) * s;
  Complex qx = (b + c) * s;
  Complex qy = im * (b - c) * s;
  Complex qz = (a - e) * s;
  a = qi;
  b = qx;
  c = qy;
  e = qz;
}

inline void pauli_digit_inverse(Complex& qi, Complex& qx, Complex& qy, Complex& qz) {
  const double s = 1.0 / std::sqrt(2.0);
  const Complex im(0.0, 1.0);
  Complex a = (qi + qz) * s;
  Complex b = (qx - im * qy) * s;
  Complex c = (qx + im * qy) * s;
  Complex e = (qi - qz) * s;
  qi = a;
  qx = b;
  qy = c;
  qz = e;
}

}  // namespace detail

/// Pauli-basis coordinates of a Hermitian matrix. The imaginary parts of the
/// transform vanish for Hermitian input and are discarded.
inline RVec to_coords(const CMat& m, const SystemLayout& layout) {
  detail::require_qubits(layout, "to_coords");
  detail::check_square_dim(m, layout, "to_coords");
  const int n = layout.factor_count();
  const int d = 1 << n;
  const int dd = d * d;

  // Gather into digit-interleaved order: digit_t = 2*row_bit_t + col_bit_t.
  std::vector<Complex> buf(static_cast<size_t>(dd));
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      int idx = 0;
      for (int t = n - 1; t >= 0; --t) {
        int rb = (r >> (n - 1 - t)) & 1;
        int cb = (c >> (n - 1 - t)) & 1;
        idx |= (2 * rb + cb) << (2 * (n - 1 - t));
      }
      buf[static_cast<size_t>(idx)] = m(r, c);
    }
  }

  for (int t = 0; t < n; ++t) {
    const int stride = 1 << (2 * (n - 1 - t));
    for (int base = 0; base < dd; base += 4 * stride) {
      for (int off = 0; off < stride; ++off) {
        detail::pauli_digit_forward(buf[static_cast<size_t>(base + off)], buf[static_cast<size_t>(base + off + stride)],
                                    buf[static_cast<size_t>(base + off + 2 * stride)],
                                    buf[static_cast<size_t>(base + off + 3 * stride)]);
      }
    }
  }

  RVec out(dd);
  for (int i = 0; i < dd; ++i) out(i) = buf[static_cast<size_t>(i)].real();
  return out;
}

inline CMat from_coords(const RVec& coords, const SystemLayout& layout) {
  detail::require_qubits(layout, "from_coords");
  const int n = layout.factor_count();
  const int d = 1 << n;
  const int dd = d * d;
  if (coords.size() != dd)
    throw std::invalid_argument("from_coords: coordinate vector has wrong length");

  std::vector<Complex> buf(static_cast<size_t>(dd));
  for (int i = 0; i < dd; ++i) buf[static_cast<size_t>(i)] = coords(i);

  for (int t = n - 1; t >= 0; --t) {
    const int stride = 1 << (2 * (n - 1 - t));
    for (int base = 0; base < dd; base += 4 * stride) {
      for (int off = 0; off < stride; ++off) {
        detail::pauli_digit_inverse(buf[static_cast<size_t>(base + off)], buf[static_cast<size_t>(base + off + stride)],
                                    buf[static_cast<size_t>(base + off + 2 * stride)],
                                    buf[static_cast<size_t>(base + off + 3 * stride)]);
      }
    }
  }

  CMat m(d, d);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      int idx = 0;
      for (int t = n - 1; t >= 0; --t) {
        int rb = (r >> (n - 1 - t)) & 1;
        int cb = (c >> (n - 1 - t)) & 1;
        idx |= (2 * rb + cb) << (2 * (n - 1 - t));
      }
      m(r, c) = buf[static_cast<size_t>(idx)];
    }
  }
  return m;
}

inline HermitianCoords coords_of(const CMat& m, const SystemLayout& layout) {
  return {layout, to_coords(m, layout)};
}

// ---------------------------------------------------------------------------
// Row-space analysis
// ---------------------------------------------------------------------------

struct RowSpace {
  int rank = 0;
  RMat basis;  // rank x n, orthonormal rows spanning the row space
};

/// Rank-revealing factorization of the row space of `rows`; `sv_cutoff` is
/// the singular-value threshold relative to the largest singular value.
inline RowSpace row_space(const RMat& rows, double sv_cutoff = 1e-9) {
  if (rows.rows() == 0) return {0, RMat(0, rows.cols())};
  Eigen::BDCSVD<RMat> svd(rows, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const double cut = sv_cutoff * std::max(smax, 1.0);
  int rank = 0;
  while (rank < sv.size() && sv(rank) > cut) ++rank;
  return {rank, RMat(svd.matrixV().leftCols(rank).transpose())};
}

/// If the projector basis^T basis is diagonal in coordinates, returns the
/// indices carrying weight 1. The certificate is exact: for a projector P of
/// rank r, sum_i P_ii = r with every P_ii in {0,1} forces the off-diagonal
/// Frobenius mass to zero.
inline std::vector<int> mask_of_projector(const RMat& basis, double tol = 1e-8) {
  std::vector<int> mask;
  double sum = 0.0;
  for (int j = 0; j < basis.cols(); ++j) {
    double w = basis.col(j).squaredNorm();
    sum += w;
    if (std::abs(w - 1.0) <= tol)
      mask.push_back(j);
    else if (std::abs(w) > tol)
      throw std::runtime_error("mask_of_projector: projector is not coordinate-aligned");
  }
  if (std::abs(sum - static_cast<double>(basis.rows())) > tol * static_cast<double>(basis.cols()))
    throw std::runtime_error("mask_of_projector: diagonal mass does not match rank");
  return mask;
}

// ---------------------------------------------------------------------------
// Matrix file format
// ---------------------------------------------------------------------------
//
// JSON object {"layout": [[label, dim], ...], "re": [...], "im": [...]}
// with entries in row-major order. All modules reuse this format.

struct LabeledMatrix {
  SystemLayout layout;
  CMat mat;
};

inline nlohmann::json matrix_to_json(const CMat& m, const SystemLayout& layout) {
  nlohmann::json j;
  j["layout"] = nlohmann::json::array();
  for (auto& [l, d] : layout.factors) j["layout"].push_back({to_string(l), d});
  std::vector<double> re, im;
  re.reserve(static_cast<size_t>(m.size()));
  im.reserve(static_cast<size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      re.push_back(m(r, c).real());
      im.push_back(m(r, c).imag());
    }
  }
  j["re"] = re;
  j["im"] = im;
  return j;
}

inline LabeledMatrix matrix_from_json(const nlohmann::json& j) {
  LabeledMatrix out;
  for (auto& f : j.at("layout"))
    out.layout.factors.emplace_back(label_from_string(f.at(0).get<std::string>()), f.at(1).get<int>());
  const int d = out.layout.total_dim();
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (static_cast<int>(re.size()) != d * d || static_cast<int>(im.size()) != d * d)
    throw std::invalid_argument("matrix_from_json: entry count does not match layout");
  out.mat.resize(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c)
      out.mat(r, c) = Complex(re[static_cast<size_t>(r * d + c)].get<double>(), im[static_cast<size_t>(r * d + c)].get<double>());
  return out;
}

inline void save_matrix(const std::string& path, const CMat& m, const SystemLayout& layout) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_matrix: cannot open " + path);
  f << matrix_to_json(m, layout).dump(2) << "\n";
}

inline LabeledMatrix load_matrix(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_matrix: cannot open " + path);
  nlohmann::json j;
  f >> j;
  return matrix_from_json(j);
}

}  // namespace switchtomo::qsys
