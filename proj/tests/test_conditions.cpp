#include <doctest.h>

#include <Eigen/Dense>

#include <vector>

#include "fixtures.hpp"
#include "polyrpi/closed_loop.hpp"
#include "polyrpi/conditions.hpp"
#include "polyrpi/errors.hpp"
#include "polyrpi/plant.hpp"
#include "test_util.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using polyrpi::augment;
using polyrpi::AugmentedSystem;
using polyrpi::buildGrids;
using polyrpi::CandidateSolution;
using polyrpi::ClosedLoopGrids;
using polyrpi::GainSchedule;
using polyrpi::LpvProblem;
using polyrpi::ResidualReport;
using polyrpi::residuals;
using polyrpi::residualsVertexPairForm;
using polyrpi::zeroGains;

namespace {

// Scalar plant x+ = a x + b u + bp p, y = x + eta, with |x|,|u| <= 1 and
// |p|,|eta| <= 0.1. Small enough that every multiplier below is hand-checked.
LpvProblem makeScalarPlant(double a, double b, double bp) {
  MatrixXd A(1, 1), B(1, 1), Bp(1, 1), C(1, 1), Deta(1, 1);
  A << a;
  B << b;
  Bp << bp;
  C << 1;
  Deta << 1;
  MatrixXd box(2, 1), noise(2, 1);
  box << 1, -1;
  noise << 10, -10;
  return LpvProblem{polyrpi::MatrixPolytope({A}),
                    polyrpi::MatrixPolytope({B}),
                    polyrpi::MatrixPolytope({Bp}),
                    C,
                    Deta,
                    polyrpi::HPolyhedron(box, VectorXd::Ones(2)),
                    polyrpi::HPolyhedron(box, VectorXd::Ones(2)),
                    std::nullopt,
                    polyrpi::HPolyhedron(noise, VectorXd::Ones(2)),
                    polyrpi::HPolyhedron(noise, VectorXd::Ones(2))};
}

// Exactly feasible candidate for the scalar plant with K̄ = -0.5: the closed
// loop is upper-triangular with diagonal (0.5, 0.5), L = [I; -I], and every
// multiplier is written out by hand.
struct ExactFixture {
  LpvProblem problem;
  AugmentedSystem aug;
  ClosedLoopGrids grids;
  CandidateSolution cand;
};

ExactFixture makeExactFixture() {
  LpvProblem p = makeScalarPlant(0.5, 0.1, 1.0);
  GainSchedule g = zeroGains(1, 1, 1);
  g.Kbar[0](0, 0) = -0.5;
  AugmentedSystem aug = augment(p);
  ClosedLoopGrids grids = buildGrids(aug, g);

  CandidateSolution c;
  c.L.resize(4, 2);
  c.L << 1, 0, 0, 1, -1, 0, 0, -1;
  c.rho.resize(4);
  c.rho << 0.4, 0.5, 0.4, 0.5;
  c.lambda = 0.7;
  c.eps1 = 0.995;
  c.gains = g;

  // Closed loop [[0.5, 0.1], [0, 0.5]]: row i of L maps to a nonnegative
  // combination of L rows.
  c.H.resize(4, 4);
  c.H << 0.5, 0.1, 0, 0,  //
      0, 0.5, 0, 0,       //
      0, 0, 0.5, 0.1,     //
      0, 0, 0, 0.5;
  // Disturbance map [[1, 0, 0], [0, 0, 0]] against blockdiag(P, N, N).
  c.V = MatrixXd::Zero(4, 6);
  c.V(0, 0) = 0.1;
  c.V(2, 1) = 0.1;

  // Xi rows (x, -x, u, -u) picked straight out of L.
  c.G = MatrixXd::Zero(4, 4);
  c.G(0, 0) = 1;
  c.G(1, 2) = 1;
  c.G(2, 1) = 1;
  c.G(3, 3) = 1;

  c.J.resize(2, 4);
  c.J << 0.5, 0, -0.5, 0, 0, 0.5, 0, -0.5;

  c.gammas = VectorXd::Ones(1);
  c.psis = {VectorXd::Unit(2, 0)};
  return ExactFixture{std::move(p), std::move(aug), std::move(grids), std::move(c)};
}

CandidateSolution randomCandidate(const LpvProblem& p, const AugmentedSystem& aug, int lr,
                                  testutil::Rng& rng) {
  CandidateSolution c;
  const int nv = p.nv(), ld = aug.Dbig.numRows(), lxi = aug.Xi.numRows(), lud = p.lud();
  c.L = rng.matrix(lr, p.nxi(), -1.0, 1.0);
  c.rho = rng.vector(lr, 0.0, 1.0);
  c.lambda = rng.uniform(0.5, 0.99);
  c.gains.K.clear();
  for (int i = 0; i < nv; ++i) {
    c.gains.K.push_back(rng.matrix(p.nu(), p.ny(), -1.0, 1.0));
    c.gains.Kbar.push_back(rng.matrix(p.nu(), p.nu(), -1.0, 1.0));
    c.gains.Khat.push_back(rng.matrix(p.nu(), p.ny(), -1.0, 1.0));
  }
  c.H = rng.matrix(nv * lr, nv * lr, 0.0, 0.5);
  c.V = rng.matrix(nv * lr, nv * ld, 0.0, 0.5);
  c.G = rng.matrix(lxi, lr, 0.0, 0.5);
  if (lud > 0) {
    c.Q = rng.matrix(nv * lud, nv * lr, 0.0, 0.5);
    c.T = rng.matrix(nv * lud, nv * ld, 0.0, 0.5);
  }
  c.J = rng.matrix(p.nxi(), lr, -1.0, 1.0);
  c.gammas = rng.vector(3, 0.1, 2.0);
  c.psis = {rng.vector(p.nxi(), -1.0, 1.0), rng.vector(p.nxi(), -1.0, 1.0),
            rng.vector(p.nxi(), -1.0, 1.0)};
  return c;
}

void checkReportsAgree(const ResidualReport& a, const ResidualReport& b, double tol) {
  CHECK(std::abs(a.stateUpdateEq - b.stateUpdateEq) <= tol);
  CHECK(std::abs(a.distUpdateEq - b.distUpdateEq) <= tol);
  CHECK(std::abs(a.contraction - b.contraction) <= tol);
  CHECK(std::abs(a.ultimateBound - b.ultimateBound) <= tol);
  CHECK(std::abs(a.stateInclusionEq - b.stateInclusionEq) <= tol);
  CHECK(std::abs(a.stateInclusionSum - b.stateInclusionSum) <= tol);
  CHECK(std::abs(a.rateStateEq - b.rateStateEq) <= tol);
  CHECK(std::abs(a.rateDistEq - b.rateDistEq) <= tol);
  CHECK(std::abs(a.rateSum - b.rateSum) <= tol);
  CHECK(std::abs(a.leftInverse - b.leftInverse) <= tol);
  CHECK(std::abs(a.directions - b.directions) <= tol);
  CHECK(std::abs(a.domain - b.domain) <= tol);
}

}  // namespace

TEST_CASE("hand-built scalar candidate satisfies every condition exactly") {
  const auto f = makeExactFixture();
  const auto rep = residuals(f.problem, f.aug, f.grids, f.cand);
  CHECK(rep.stateUpdateEq <= 1e-15);
  CHECK(rep.distUpdateEq <= 1e-15);
  CHECK(rep.contraction <= 1e-15);
  CHECK(rep.ultimateBound <= 1e-15);
  CHECK(rep.stateInclusionEq <= 1e-15);
  CHECK(rep.stateInclusionSum <= 1e-15);
  CHECK(rep.rateStateEq == 0.0);  // no rate constraint in this fixture
  CHECK(rep.leftInverse <= 1e-15);
  CHECK(rep.directions <= 1e-15);
  CHECK(rep.domain == 0.0);
  CHECK(rep.feasible(1e-9));
  CHECK(rep.worstPair == 0);
}

TEST_CASE("single violations surface in the matching residual field") {
  const auto base = makeExactFixture();

  {
    auto c = base.cand;
    c.lambda = 0.6;  // row sums reach 0.7
    const auto rep = residuals(base.problem, base.aug, base.grids, c);
    CHECK(rep.contraction == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_FALSE(rep.feasible(1e-6));
  }
  {
    auto c = base.cand;
    c.L(0, 0) += 0.1;  // breaks the state-update equality
    const auto rep = residuals(base.problem, base.aug, base.grids, c);
    CHECK(rep.stateUpdateEq > 1e-3);
  }
  {
    auto c = base.cand;
    c.rho(0) = 0.2;  // ultimate-bound row 1: 0.25 vs 0.995 * 0.2
    const auto rep = residuals(base.problem, base.aug, base.grids, c);
    CHECK(rep.ultimateBound == doctest::Approx(0.25 - 0.995 * 0.2).epsilon(1e-12));
  }
  {
    auto c = base.cand;
    c.gammas(0) = 2.0;
    const auto rep = residuals(base.problem, base.aug, base.grids, c);
    CHECK(rep.directions == doctest::Approx(1.0).epsilon(1e-12));
  }
  {
    auto c = base.cand;
    c.G(0, 0) = 1.2;
    const auto rep = residuals(base.problem, base.aug, base.grids, c);
    CHECK(rep.stateInclusionEq == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(rep.stateInclusionSum == doctest::Approx(0.2).epsilon(1e-12));
  }
  {
    auto c = base.cand;
    c.H(0, 0) = -0.01;
    const auto rep = residuals(base.problem, base.aug, base.grids, c);
    CHECK(rep.domain == doctest::Approx(0.01).epsilon(1e-12));
    CHECK_FALSE(rep.feasible(1e-6));
  }
  {
    auto c = base.cand;
    c.J.setZero();
    const auto rep = residuals(base.problem, base.aug, base.grids, c);
    CHECK(rep.leftInverse == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("vanishing plant makes the state-update equality trivially exact") {
  LpvProblem p = makeScalarPlant(0.0, 0.0, 0.0);
  const auto aug = augment(p);
  const auto grids = buildGrids(aug, zeroGains(1, 1, 1));

  CandidateSolution c;
  c.L.resize(2, 2);
  c.L << 1, 0, -1, 0;  // input column annihilated
  c.rho = VectorXd::Constant(2, 0.5);
  c.lambda = 0.5;
  c.gains = zeroGains(1, 1, 1);
  c.H = MatrixXd::Zero(2, 2);
  c.V = MatrixXd::Zero(2, 6);
  c.G = MatrixXd::Zero(4, 2);
  c.J = MatrixXd::Zero(2, 2);
  c.gammas = VectorXd(0);
  c.psis = {};

  const auto rep = residuals(p, aug, grids, c);
  CHECK(rep.stateUpdateEq == 0.0);
  CHECK(rep.distUpdateEq == 0.0);
}

TEST_CASE("single-vertex pair form reproduces the stacked form verbatim") {
  const auto f = makeExactFixture();
  const auto a = residuals(f.problem, f.aug, f.grids, f.cand);
  const auto b = residualsVertexPairForm(f.problem, f.aug, f.grids, f.cand);
  checkReportsAgree(a, b, 0.0);
  CHECK(a.worstPair == b.worstPair);
}

TEST_CASE("stacked and pair forms agree on random four-vertex candidates") {
  const LpvProblem p = fixtures::makeExample2();
  const auto aug = augment(p);
  testutil::Rng rng(909);
  for (int it = 0; it < 10; ++it) {
    const auto c = randomCandidate(p, aug, 12, rng);
    const auto grids = buildGrids(aug, c.gains);
    const auto a = residuals(p, aug, grids, c);
    const auto b = residualsVertexPairForm(p, aug, grids, c);
    checkReportsAgree(a, b, 1e-12);
    CHECK(a.worstPair == b.worstPair);
    CHECK(a.worstPair >= 0);
    CHECK(a.worstPair < 16);
  }
}

TEST_CASE("feasible contraction bounds the one-step image from inside") {
  const auto f = makeExactFixture();
  testutil::Rng rng(31);
  const MatrixXd Acl = f.grids.Acl.block(0, 0);
  const MatrixXd Bcl = f.grids.Bcl.block(0, 0);
  for (int it = 0; it < 100; ++it) {
    const VectorXd xi = rng.vector(2, -1.0, 1.0);    // L xi <= 1 on the unit box
    const VectorXd d = rng.vector(3, -0.1, 0.1);     // within blockdiag(P, N, N)
    const VectorXd next = Acl * xi + Bcl * d;
    CHECK((f.cand.L * next).maxCoeff() <= f.cand.lambda + 1e-12);
  }
}

TEST_CASE("row scaling of the set description preserves membership") {
  const auto s = fixtures::example2Published();
  const polyrpi::HPolyhedron lam(s.L, VectorXd::Ones(12));
  const polyrpi::HPolyhedron lam0(s.L, s.rho);

  MatrixXd L2 = s.L;
  L2.row(3) *= 2.5;
  VectorXd phi2 = VectorXd::Ones(12);
  phi2(3) = 2.5;
  VectorXd rho2 = s.rho;
  rho2(3) *= 2.5;
  const polyrpi::HPolyhedron lamScaled(L2, phi2);
  const polyrpi::HPolyhedron lam0Scaled(L2, rho2);

  testutil::Rng rng(555);
  for (int it = 0; it < 200; ++it) {
    const VectorXd x = rng.vector(3, -6.0, 6.0);
    CHECK(lam.contains(x) == lamScaled.contains(x));
    CHECK(lam0.contains(x) == lam0Scaled.contains(x));
  }
}

TEST_CASE("candidate shape mismatches are rejected") {
  const auto f = makeExactFixture();
  {
    auto c = f.cand;
    c.H = MatrixXd::Zero(3, 4);
    CHECK_THROWS_AS((void)residuals(f.problem, f.aug, f.grids, c), polyrpi::InvalidDimension);
  }
  {
    auto c = f.cand;
    c.psis.push_back(VectorXd::Zero(2));  // one direction more than gammas
    CHECK_THROWS_AS((void)residuals(f.problem, f.aug, f.grids, c), polyrpi::InvalidDimension);
  }
  {
    auto c = f.cand;
    c.J = MatrixXd::Zero(3, 4);
    CHECK_THROWS_AS((void)residualsVertexPairForm(f.problem, f.aug, f.grids, c),
                    polyrpi::InvalidDimension);
  }
}
