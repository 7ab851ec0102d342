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

#include <catch2/catch_amalgamated.hpp>

#include "switchtomo/qsys.hpp"

#include <random>

using namespace switchtomo;
using qsys::CMat;
using qsys::Complex;
using qsys::CVec;
using qsys::RVec;
using qsys::SysLabel;
using qsys::SystemLayout;

namespace {

CMat random_hermitian(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMat m(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) m(r, c) = Complex(g(rng), g(rng));
  return 0.5 * (m + m.adjoint());
}

}  // namespace

TEST_CASE("kron basics") {
  CMat i2 = CMat::Identity(2, 2);
  REQUIRE(qsys::max_abs(qsys::kron(i2, i2) - CMat::Identity(4, 4)) < 1e-15);

  // |0><0| x |1><1| = |01><01| with basis order (00,01,10,11)
  CMat p01 = qsys::kron(qsys::proj(qsys::ket0()), qsys::proj(qsys::ket1()));
  CMat expect = CMat::Zero(4, 4);
  expect(1, 1) = 1;
  REQUIRE(qsys::max_abs(p01 - expect) < 1e-15);

  // (X x Z)|00> = |10>, by direct 4x4 matrix-vector product
  CVec v00 = CVec::Zero(4);
  v00(0) = 1;
  CVec out = qsys::kron(qsys::pauli(1), qsys::pauli(3)) * v00;
  CVec v10 = CVec::Zero(4);
  v10(2) = 1;
  REQUIRE((out - v10).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("kron associativity on random factors") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    CMat a = random_hermitian(2, rng), b = random_hermitian(3, rng), c = random_hermitian(2, rng);
    CMat lhs = qsys::kron(qsys::kron(a, b), c);
    CMat rhs = qsys::kron(a, qsys::kron(b, c));
    REQUIRE(qsys::max_abs(lhs - rhs) < 1e-12);
  }
}

TEST_CASE("partial trace on product and entangled states") {
  SystemLayout two{{{SysLabel::Ain, 2}, {SysLabel::Aout, 2}}};
  std::mt19937_64 rng(5);
  CMat rho = random_hermitian(2, rng);
  CMat sigma = random_hermitian(2, rng);

  CMat reduced = qsys::partial_trace(qsys::kron(rho, sigma), two, {SysLabel::Ain});
  REQUIRE(qsys::max_abs(reduced - rho * sigma.trace()) < 1e-12);

  // maximally entangled marginal
  CVec phi = (qsys::kron_vec(qsys::ket0(), qsys::ket0()) + qsys::kron_vec(qsys::ket1(), qsys::ket1())) /
             std::sqrt(2.0);
  CMat marg = qsys::partial_trace(qsys::proj(phi), two, {SysLabel::Aout});
  REQUIRE(qsys::max_abs(marg - 0.5 * CMat::Identity(2, 2)) < 1e-12);

  SECTION("trace preservation on random Hermitian") {
    SystemLayout lay = SystemLayout::simplified_switch();
    CMat m = random_hermitian(64, rng);
    for (auto keep : {std::vector<SysLabel>{SysLabel::Pt},
                      std::vector<SysLabel>{SysLabel::Ain, SysLabel::Bout},
                      std::vector<SysLabel>{SysLabel::Pt, SysLabel::Aout, SysLabel::Fc}}) {
      CMat red = qsys::partial_trace(m, lay, keep);
      REQUIRE(std::abs((red.trace() - m.trace()).real()) < 1e-10);
      REQUIRE(std::abs((red.trace() - m.trace()).imag()) < 1e-10);
    }
  }

  SECTION("unknown label rejected") {
    REQUIRE_THROWS_AS(qsys::partial_trace(rho, two, {SysLabel::Fc}), std::invalid_argument);
  }
}

TEST_CASE("partial transpose") {
  SystemLayout two{{{SysLabel::Ain, 2}, {SysLabel::Aout, 2}}};

  // full transpose of a real symmetric matrix is itself
  CMat sym = CMat::Zero(4, 4);
  sym << 1, 2, 3, 4, 2, 5, 6, 7, 3, 6, 8, 9, 4, 7, 9, 0;
  REQUIRE(qsys::max_abs(qsys::partial_transpose(sym, two, {SysLabel::Ain, SysLabel::Aout}) - sym) <
          1e-15);

  std::mt19937_64 rng(7);
  CMat m = random_hermitian(4, rng);
  CMat twice = qsys::partial_transpose(qsys::partial_transpose(m, two, {SysLabel::Ain}), two,
                                       {SysLabel::Ain});
  REQUIRE(qsys::max_abs(twice - m) < 1e-14);

  // partial transpose of a Bell projector is SWAP/2, eigenvalues {+-1/2}
  CVec phi = (qsys::kron_vec(qsys::ket0(), qsys::ket0()) + qsys::kron_vec(qsys::ket1(), qsys::ket1())) /
             std::sqrt(2.0);
  CMat pt = qsys::partial_transpose(qsys::proj(phi), two, {SysLabel::Aout});
  CMat swap = CMat::Zero(4, 4);
  swap(0, 0) = swap(3, 3) = swap(1, 2) = swap(2, 1) = 1;
  REQUIRE(qsys::max_abs(pt - 0.5 * swap) < 1e-14);
  RVec evals = qsys::herm_eig(pt).eigenvalues;
  REQUIRE(evals(0) == Catch::Approx(-0.5).margin(1e-12));
  REQUIRE(evals(3) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("herm_eig") {
  RVec z_evals = qsys::herm_eig(qsys::pauli(3)).eigenvalues;
  REQUIRE(z_evals(0) == Catch::Approx(-1.0).margin(1e-14));
  REQUIRE(z_evals(1) == Catch::Approx(1.0).margin(1e-14));

  auto x_eig = qsys::herm_eig(qsys::pauli(1));
  REQUIRE(x_eig.eigenvalues(0) == Catch::Approx(-1.0).margin(1e-14));
  // eigenvector of -1 is |-> up to phase
  CVec v = x_eig.eigenvectors.col(0);
  REQUIRE(std::abs(std::abs(v.dot(qsys::ket_minus())) - 1.0) < 1e-12);

  SECTION("reconstruction residual") {
    std::mt19937_64 rng(3);
    CMat m = random_hermitian(16, rng);
    auto [vals, vecs] = qsys::herm_eig(m);
    CMat rec = vecs * vals.asDiagonal() * vecs.adjoint();
    REQUIRE(qsys::max_abs(rec - m) <= 1e-10 * qsys::max_abs(m));
  }

  SECTION("non-Hermitian rejected") {
    CMat bad = CMat::Zero(2, 2);
    bad(0, 1) = 1.0;
    REQUIRE_THROWS_AS(qsys::herm_eig(bad), std::invalid_argument);
  }
}

TEST_CASE("psd_project") {
  std::mt19937_64 rng(13);
  CMat psd = random_hermitian(8, rng);
  psd = psd * psd.adjoint() + 1e-3 * CMat::Identity(8, 8);
  REQUIRE(qsys::max_abs(qsys::psd_project(psd) - psd) < 1e-10);

  CMat diag = CMat::Zero(2, 2);
  diag(0, 0) = 1;
  diag(1, 1) = -1;
  CMat clipped = qsys::psd_project(diag);
  CMat expect = CMat::Zero(2, 2);
  expect(0, 0) = 1;
  REQUIRE(qsys::max_abs(clipped - expect) < 1e-14);

  // Z - 0.5 I clips to diag(0.5, 0) in the Z eigenbasis
  CMat shifted = qsys::pauli(3) - 0.5 * CMat::Identity(2, 2);
  CMat proj = qsys::psd_project(shifted);
  CMat byhand = CMat::Zero(2, 2);
  byhand(0, 0) = 0.5;
  REQUIRE(qsys::max_abs(proj - byhand) < 1e-14);

  SECTION("idempotent and PSD") {
    CMat m = random_hermitian(8, rng);
    CMat p = qsys::psd_project(m);
    REQUIRE(qsys::min_eigenvalue(p) >= -1e-12);
    REQUIRE(qsys::max_abs(qsys::psd_project(p) - p) < 1e-12);
  }
}

TEST_CASE("trace inner product is real on Hermitian pairs") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    CMat a = random_hermitian(8, rng), b = random_hermitian(8, rng);
    REQUIRE(std::abs(qsys::trace_inner(a, b).imag()) < 1e-12);
  }
}

TEST_CASE("Hermitian coordinates round trip") {
  SystemLayout lay = SystemLayout::simplified_switch();
  std::mt19937_64 rng(23);
  CMat m = random_hermitian(64, rng);
  RVec coords = qsys::to_coords(m, lay);
  CMat back = qsys::from_coords(coords, lay);
  REQUIRE(qsys::max_abs(back - m) < 1e-12);
  RVec coords2 = qsys::to_coords(back, lay);
  REQUIRE((coords2 - coords).cwiseAbs().maxCoeff() < 1e-12);

  SECTION("coordinates are the normalized Pauli expansion") {
    SystemLayout two{{{SysLabel::Pt, 2}, {SysLabel::Fc, 2}}};
    CMat m2 = random_hermitian(4, rng);
    RVec c2 = qsys::to_coords(m2, two);
    for (int p = 0; p < 4; ++p) {
      for (int q = 0; q < 4; ++q) {
        CMat basis = qsys::kron(qsys::pauli(p), qsys::pauli(q)) / 2.0;
        double expect = qsys::trace_inner(basis, m2).real();
        REQUIRE(c2(4 * p + q) == Catch::Approx(expect).margin(1e-12));
      }
    }
  }

  SECTION("inner products are preserved") {
    CMat a = random_hermitian(64, rng), b = random_hermitian(64, rng);
    double direct = qsys::trace_inner(a, b).real();
    double via = qsys::to_coords(a, lay).dot(qsys::to_coords(b, lay));
    REQUIRE(via == Catch::Approx(direct).margin(1e-9));
  }
}

TEST_CASE("factor reordering") {
  SystemLayout ab{{{SysLabel::Ain, 2}, {SysLabel::Bin, 2}}};
  SystemLayout ba{{{SysLabel::Bin, 2}, {SysLabel::Ain, 2}}};
  std::mt19937_64 rng(29);
  CMat a = random_hermitian(2, rng), b = random_hermitian(2, rng);
  CMat m = qsys::kron(a, b);
  CMat swapped = qsys::reorder_factors(m, ab, ba);
  REQUIRE(qsys::max_abs(swapped - qsys::kron(b, a)) < 1e-13);
  CMat back = qsys::reorder_factors(swapped, ba, ab);
  REQUIRE(qsys::max_abs(back - m) < 1e-13);
}

TEST_CASE("matrix JSON round trip") {
  SystemLayout lay{{{SysLabel::Pt, 2}, {SysLabel::Fc, 2}}};
  std::mt19937_64 rng(31);
  CMat m = random_hermitian(4, rng);
  auto j = qsys::matrix_to_json(m, lay);
  auto back = qsys::matrix_from_json(j);
  REQUIRE(back.layout == lay);
  REQUIRE(qsys::max_abs(back.mat - m) < 1e-15);
}
