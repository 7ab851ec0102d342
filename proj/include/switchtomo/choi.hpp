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

#include <string>
#include <vector>

#include "switchtomo/qsys.hpp"

namespace switchtomo::choi {

using qsys::CMat;
using qsys::Complex;
using qsys::CVec;

/// Choi operator of a linear map, stored over (in x out) with the input
/// factor most significant. Unnormalized convention: a CPTP Choi has trace
/// equal to the input dimension.
struct ChoiOperator {
  CMat mat;
  int in_dim = 0;
  int out_dim = 0;

  bool is_cp(double tol = 1e-10) const { return qsys::min_eigenvalue(mat) >= -tol; }

  /// Trace preservation: Tr_out(C) = identity on the input space.
  bool is_tp(double tol = 1e-10) const {
    return qsys::max_abs(trace_out() - CMat::Identity(in_dim, in_dim)) <= tol;
  }

  CMat trace_out() const {
    CMat red = CMat::Zero(in_dim, in_dim);
    for (int a = 0; a < in_dim; ++a)
      for (int c = 0; c < in_dim; ++c)
        for (int b = 0; b < out_dim; ++b) red(a, c) += mat(a * out_dim + b, c * out_dim + b);
    return red;
  }
};

inline void require_unitary(const CMat& u, double tol, const char* where) {
  if (u.rows() != u.cols() ||
      qsys::max_abs(u.adjoint() * u - CMat::Identity(u.rows(), u.cols())) > tol)
    throw std::invalid_argument(std::string(where) + ": input is not unitary within tolerance");
}

/// Choi vector sum_i |i> (x) U|i> with |i> the computational basis.
inline CVec choi_vector_of_unitary(const CMat& u) {
  require_unitary(u, 1e-10, "choi_vector_of_unitary");
  const int d = static_cast<int>(u.rows());
  CVec v = CVec::Zero(d * d);
  for (int i = 0; i < d; ++i) v.segment(i * d, d) = u.col(i);
  return v;
}

/// Choi operator of a unitary channel, the rank-1 outer product of its Choi
/// vector.
inline ChoiOperator choi_of_unitary(const CMat& u) {
  CVec v = choi_vector_of_unitary(u);
  return {v * v.adjoint(), static_cast<int>(u.rows()), static_cast<int>(u.cols())};
}

/// Action of a map on a state through its Choi operator:
/// C(rho) = Tr_in((rho^T (x) 1) C).
inline CMat apply_channel(const ChoiOperator& c, const CMat& rho) {
  if (rho.rows() != c.in_dim || rho.cols() != c.in_dim)
    throw std::invalid_argument("apply_channel: state dimension does not match channel input");
  CMat out = CMat::Zero(c.out_dim, c.out_dim);
  for (int b = 0; b < c.out_dim; ++b)
    for (int d = 0; d < c.out_dim; ++d)
      for (int a = 0; a < c.in_dim; ++a)
        for (int ap = 0; ap < c.in_dim; ++ap)
          out(b, d) += rho(ap, a) * c.mat(ap * c.out_dim + b, a * c.out_dim + d);
  return out;
}

/// Choi operator of a measure-and-reprepare element: R = effect^T (x) sigma.
inline ChoiOperator measure_reprepare(const CMat& effect, const CMat& sigma) {
  if (qsys::min_eigenvalue(effect) < -1e-10)
    throw std::invalid_argument("measure_reprepare: effect is not positive semidefinite");
  return {qsys::kron(effect.transpose(), sigma), static_cast<int>(effect.rows()),
          static_cast<int>(sigma.rows())};
}

/// A quantum instrument: CP elements summing to a trace-preserving Choi.
struct Instrument {
  std::vector<ChoiOperator> elements;
  std::vector<std::string> outcome_labels;

  bool valid(double tol = 1e-10) const {
    if (elements.empty()) return false;
    CMat sum = CMat::Zero(elements[0].mat.rows(), elements[0].mat.cols());
    for (auto& e : elements) {
      if (!e.is_cp(tol)) return false;
      sum += e.mat;
    }
    ChoiOperator total{sum, elements[0].in_dim, elements[0].out_dim};
    return total.is_tp(tol);
  }
};

/// A POVM: PSD effects summing to the identity.
struct Povm {
  std::vector<CMat> effects;

  bool valid(double tol = 1e-10) const {
    if (effects.empty()) return false;
    CMat sum = CMat::Zero(effects[0].rows(), effects[0].cols());
    for (auto& e : effects) {
      if (qsys::min_eigenvalue(e) < -tol) return false;
      sum += e;
    }
    return qsys::max_abs(sum - CMat::Identity(sum.rows(), sum.cols())) <= tol;
  }
};

}  // namespace switchtomo::choi
