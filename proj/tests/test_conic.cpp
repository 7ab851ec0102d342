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

#include "switchtomo/causal.hpp"
#include "switchtomo/conic.hpp"

using namespace switchtomo;
using conic::BlockKind;
using conic::ConicProgram;
using conic::SolveStatus;
using qsys::RVec;

TEST_CASE("absolute-value epigraph toy") {
  // min t s.t. t >= x, t >= -x, x = 0.3
  ConicProgram p;
  int t = p.add_block(BlockKind::Free, 1);
  int x = p.add_block(BlockKind::Free, 1);
  int s1 = p.add_block(BlockKind::NonNeg, 1);
  int s2 = p.add_block(BlockKind::NonNeg, 1);
  p.add_row({{t, 0, 1.0}, {x, 0, -1.0}, {s1, 0, -1.0}}, 0.0);
  p.add_row({{t, 0, 1.0}, {x, 0, 1.0}, {s2, 0, -1.0}}, 0.0);
  p.add_row({{x, 0, 1.0}}, 0.3);
  p.add_objective(t, 0, 1.0);

  auto sol = conic::solve(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  REQUIRE(sol.objective == Catch::Approx(0.3).margin(1e-6));

  SECTION("equality constraints hold at the solution") {
    RVec resid = p.constraint_matrix() * sol.x - p.rhs();
    REQUIRE(resid.cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("smallest eigenvalue toy") {
  // min Tr(diag(1,2) rho) s.t. rho PSD, Tr rho = 1  ->  1 at rho = |0><0|
  ConicProgram p;
  int rho = p.add_block(BlockKind::PsdHerm, 4, 2);
  qsys::CMat cost(2, 2);
  cost << 1, 0, 0, 2;
  RVec c = qsys::to_coords(cost, qsys::SystemLayout::qubits(1));
  p.add_objective(rho, c);
  // Tr rho = sqrt(2) * identity coordinate
  p.add_row({{rho, 0, std::sqrt(2.0)}}, 1.0);

  auto sol = conic::solve(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  REQUIRE(sol.objective == Catch::Approx(1.0).margin(1e-6));
  qsys::CMat m = qsys::from_coords(sol.block(p, rho), qsys::SystemLayout::qubits(1));
  REQUIRE(qsys::max_abs(m - qsys::proj(qsys::ket0())) < 1e-5);
}

TEST_CASE("l1 epigraph fragment") {
  SECTION("fragment adds one nonnegative pair per residual") {
    ConicProgram p;
    int x = p.add_block(BlockKind::Free, 1);
    int before = p.total_size();
    conic::l1_epigraph(p, {{{x, 0, 1.0}}, {{x, 0, 1.0}}, {{x, 0, 1.0}}}, {0.0, 0.0, 0.0}, 1.0);
    REQUIRE(p.total_size() - before == 6);
  }

  SECTION("matches a grid-search oracle on a 2-term toy") {
    // min |x - 0.55| + |x + 0.2| over x: flat minimum 0.75 on [-0.2, 0.55].
    double best = std::numeric_limits<double>::infinity();
    for (int k = -2000; k <= 2000; ++k) {
      double x = k * 1e-3;
      best = std::min(best, std::abs(x - 0.55) + std::abs(x + 0.2));
    }
    REQUIRE(best == Catch::Approx(0.75).margin(1e-9));

    ConicProgram p;
    int x = p.add_block(BlockKind::Free, 1);
    conic::l1_epigraph(p, {{{x, 0, 1.0}}, {{x, 0, 1.0}}}, {0.55, -0.2}, 1.0);
    auto sol = conic::solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    REQUIRE(sol.objective == Catch::Approx(best).margin(1e-6));
  }

  SECTION("composition with an equality constraint preserves the optimum") {
    // min |x - 0.55| + |x + 0.2| s.t. x = 1  ->  0.45 + 1.2
    ConicProgram p;
    int x = p.add_block(BlockKind::Free, 1);
    conic::l1_epigraph(p, {{{x, 0, 1.0}}, {{x, 0, 1.0}}}, {0.55, -0.2}, 1.0);
    p.add_row({{x, 0, 1.0}}, 1.0);
    auto sol = conic::solve(p);
    REQUIRE(sol.objective == Catch::Approx(0.45 + 1.2).margin(1e-6));
  }
}

TEST_CASE("dual cone membership fragment") {
  const auto& comb_a = causal::comb_subspace(procmat::CausalOrder::AThenB);
  const auto& comb_b = causal::comb_subspace(procmat::CausalOrder::BThenA);
  const auto lay = qsys::SystemLayout::simplified_switch();

  auto feasibility = [&](const qsys::CMat& g) {
    ConicProgram p;
    int gb = p.add_block(BlockKind::Free, 4096);
    RVec gc = qsys::to_coords(g, lay);
    for (int s = 0; s < 4096; ++s) p.add_row({{gb, s, 1.0}}, gc(s));
    auto entries = [gb](int s) {
      return std::vector<std::tuple<int, int, double>>{{gb, s, 1.0}};
    };
    conic::dual_cone_membership(p, entries, comb_a.allowed, 64);
    conic::dual_cone_membership(p, entries, comb_b.allowed, 64);
    conic::SolveOptions o;
    o.eps = 1e-7;
    o.max_iter = 20000;
    return conic::solve(p, o).status;
  };

  SECTION("identity is in every dual cone") {
    REQUIRE(feasibility(qsys::CMat::Identity(64, 64)) == SolveStatus::Optimal);
  }

  SECTION("negative identity is not") {
    REQUIRE(feasibility(-qsys::CMat::Identity(64, 64)) == SolveStatus::Infeasible);
  }
}

TEST_CASE("determinism under block reordering") {
  auto build = [](bool swap_blocks) {
    ConicProgram p;
    int a, b;
    if (swap_blocks) {
      b = p.add_block(BlockKind::NonNeg, 2);
      a = p.add_block(BlockKind::Free, 2);
    } else {
      a = p.add_block(BlockKind::Free, 2);
      b = p.add_block(BlockKind::NonNeg, 2);
    }
    p.add_row({{a, 0, 1.0}, {b, 0, 1.0}}, 1.0);
    p.add_row({{a, 1, 1.0}, {b, 1, -2.0}}, 0.5);
    p.add_row({{a, 0, 1.0}, {a, 1, -1.0}}, 0.25);
    p.add_objective(a, 0, 1.0);
    p.add_objective(b, 1, 0.5);
    return conic::solve(p).objective;
  };
  REQUIRE(build(false) == Catch::Approx(build(true)).margin(1e-4));
}

TEST_CASE("comb subspace dimensions and membership") {
  const auto& ca = causal::comb_subspace(procmat::CausalOrder::AThenB);
  const auto& cb = causal::comb_subspace(procmat::CausalOrder::BThenA);
  // kill sets: 4^4*3 (future-trivial, second output nontrivial) + 4^2*3
  // (second party trivial, first output nontrivial) + 3 (only past nontrivial)
  REQUIRE(ca.killed.size() == 768 + 48 + 3);
  REQUIRE(cb.killed.size() == 768 + 48 + 3);
  REQUIRE(ca.dim == 4096 - 819);

  auto lay = qsys::SystemLayout::simplified_switch();
  auto in_subspace = [&](const qsys::CMat& m, const causal::CombSubspace& sub) {
    RVec c = qsys::to_coords(m, lay);
    double r = 0;
    for (int s : sub.killed) r += c(s) * c(s);
    return std::sqrt(r);
  };

  std::mt19937_64 rng(7);
  REQUIRE(in_subspace(procmat::comb_process(procmat::CausalOrder::AThenB).mat, ca) < 1e-10);
  REQUIRE(in_subspace(procmat::comb_process(procmat::CausalOrder::BThenA).mat, cb) < 1e-10);
  REQUIRE(in_subspace(procmat::random_comb(procmat::CausalOrder::AThenB, rng).mat, ca) < 1e-9);
  REQUIRE(in_subspace(procmat::random_comb(procmat::CausalOrder::BThenA, rng).mat, cb) < 1e-9);
  REQUIRE(in_subspace(procmat::comb_process(procmat::CausalOrder::AThenB).mat, cb) > 0.5);
  REQUIRE(in_subspace(procmat::switch_simplified(qsys::ket_yminus()).mat, ca) > 0.5);

  SECTION("coordinate-level residuals match the matrix-level conditions") {
    // Aggregate membership distance vs the comb_membership residual norms on
    // a random Hermitian matrix: both vanish together on true combs and are
    // simultaneously positive otherwise (checked on the switch above); here
    // check the projector reproduces combs exactly.
    auto w = procmat::comb_process(procmat::CausalOrder::AThenB);
    RVec c = qsys::to_coords(w.mat, lay);
    ca.project(c);
    REQUIRE(qsys::max_abs(qsys::from_coords(c, lay) - w.mat) < 1e-10);
  }
}
