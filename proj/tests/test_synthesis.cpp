#include "polyrpi/synthesis.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "polyrpi/certification.hpp"
#include "polyrpi/closed_loop.hpp"
#include "polyrpi/conditions.hpp"
#include "polyrpi/errors.hpp"
#include "polyrpi/plant.hpp"
#include "polyrpi/polyhedron.hpp"
#include "test_util.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Scalar plant x+ = a x + b u + bp p, y = x + eta, |x|,|u| <= 1,
// |p|,|eta| <= 0.1.
polyrpi::LpvProblem makeScalarPlant(double a, double b, double bp) {
  MatrixXd A(1, 1), B(1, 1), Bp(1, 1), C(1, 1), Deta(1, 1);
  A << a;
  B << b;
  Bp << bp;
  C << 1;
  Deta << 1;
  MatrixXd bound(2, 1);
  bound << 1, -1;
  MatrixXd noise(2, 1);
  noise << 10, -10;
  return polyrpi::LpvProblem{polyrpi::MatrixPolytope({A}),
                             polyrpi::MatrixPolytope({B}),
                             polyrpi::MatrixPolytope({Bp}),
                             C,
                             Deta,
                             polyrpi::HPolyhedron(bound, VectorXd::Ones(2)),
                             polyrpi::HPolyhedron(bound, VectorXd::Ones(2)),
                             std::nullopt,
                             polyrpi::HPolyhedron(noise, VectorXd::Ones(2)),
                             polyrpi::HPolyhedron(noise, VectorXd::Ones(2))};
}

std::vector<polyrpi::DirectionSpec> freeInputDirections() {
  std::vector<polyrpi::DirectionSpec> dirs;
  for (const auto& v : fixtures::doubleIntegratorDirections()) dirs.push_back({v, {}});
  return dirs;
}

// Phase-2 sweeps report zero violation; across them the objective must be
// nondecreasing (each block optimizes over a set containing its incumbent)
// up to the tolerance cushions the blocks grant each other.
void checkMonotoneHistory(const polyrpi::StartReport& rep) {
  for (size_t k = 1; k < rep.history.size(); ++k) {
    if (rep.history[k - 1].violation <= 1e-9 && rep.history[k].violation <= 1e-9)
      CHECK(rep.history[k].objective >= rep.history[k - 1].objective - 1e-6);
  }
}

double stateProjectionArea(const MatrixXd& L) {
  const polyrpi::HPolyhedron lam(L, VectorXd::Ones(L.rows()));
  const polyrpi::HPolyhedron proj = polyrpi::project(lam, {0, 1});
  return polyrpi::volume(proj).value;
}

}  // namespace

TEST_CASE("gain maps reproduce the closed-loop grids") {
  testutil::Rng rng(314159);
  const auto checkProblem = [&](const polyrpi::LpvProblem& problem, const MatrixXd& L) {
    const polyrpi::AugmentedSystem aug = polyrpi::augment(problem);
    const polyrpi::FrozenGainMaps maps = polyrpi::buildFrozenGainMaps(problem, aug, L);
    const int nv = problem.nv();
    for (int trial = 0; trial < 5; ++trial) {
      const VectorXd g = rng.vector(maps.layout.size(), -0.5, 0.5);
      const polyrpi::GainSchedule gains = maps.layout.unpack(g);
      CHECK((maps.layout.pack(gains) - g).cwiseAbs().maxCoeff() == 0.0);
      const polyrpi::ClosedLoopGrids grids = polyrpi::buildGrids(aug, gains);
      for (int r = 0; r < nv; ++r) {
        for (int c = 0; c < nv; ++c) {
          const int pair = r * nv + c;
          const double errA =
              (maps.LAcl[pair].at(g) - L * grids.Acl.block(r, c)).cwiseAbs().maxCoeff();
          const double errB =
              (maps.LBcl[pair].at(g) - L * grids.Bcl.block(r, c)).cwiseAbs().maxCoeff();
          CHECK(errA <= 1e-12);
          CHECK(errB <= 1e-12);
          if (problem.Udelta) {
            const MatrixXd& Ud = problem.Udelta->P();
            const double errQ =
                (maps.UdAdu[pair].at(g) - Ud * grids.Adu.block(r, c)).cwiseAbs().maxCoeff();
            const double errT =
                (maps.UdBdu[pair].at(g) - Ud * grids.Bdu.block(r, c)).cwiseAbs().maxCoeff();
            CHECK(errQ <= 1e-12);
            CHECK(errT <= 1e-12);
          }
        }
      }
    }
  };

  SUBCASE("coupled tank, four vertices with rate constraints") {
    checkProblem(fixtures::makeExample2(), fixtures::example2Published().L);
  }
  SUBCASE("double integrator, two vertices") {
    checkProblem(fixtures::makeExample1Lpv(), rng.matrix(7, 3, -1.0, 1.0));
  }
  SUBCASE("double integrator, single vertex") {
    checkProblem(fixtures::makeExample1Lti(), rng.matrix(9, 3, -1.0, 1.0));
  }
}

TEST_CASE("initial guesses are reproducible and well formed") {
  const polyrpi::LpvProblem problem = fixtures::makeExample1Lti();
  const polyrpi::AugmentedSystem aug = polyrpi::augment(problem);
  polyrpi::SynthesisConfig cfg;
  cfg.lr = 9;
  cfg.theta = 0.0;
  cfg.directions = freeInputDirections();

  const polyrpi::CandidateSolution g1 = polyrpi::initialGuess(problem, cfg, 7);
  const polyrpi::CandidateSolution g2 = polyrpi::initialGuess(problem, cfg, 7);
  const polyrpi::CandidateSolution g3 = polyrpi::initialGuess(problem, cfg, 8);

  CHECK(g1.L.rows() == 9);
  CHECK(g1.L.cols() == 3);
  // the state-input box rows come first, verbatim, so the candidate set is
  // contained in the constraints from the start; the extra rows are unit norm
  const MatrixXd Xi = aug.Xi.P();
  CHECK((g1.L.topRows(Xi.rows()) - Xi).cwiseAbs().maxCoeff() == 0.0);
  for (int i = static_cast<int>(Xi.rows()); i < g1.L.rows(); ++i)
    CHECK(g1.L.row(i).norm() == doctest::Approx(1.0));
  CHECK((g1.rho.array() == 0.5).all());
  CHECK(g1.lambda == 0.99);
  CHECK((g1.J * g1.L - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-10);
  for (const auto& K : g1.gains.K) CHECK(K.allFinite());
  for (const auto& Kb : g1.gains.Kbar) CHECK(Kb.allFinite());
  for (const auto& Kh : g1.gains.Khat) CHECK(Kh.allFinite());
  // the initial gains must stabilize the nominal loop
  const polyrpi::ClosedLoopGrids grids = polyrpi::buildGrids(aug, g1.gains);
  const double specRad =
      grids.Acl.block(0, 0).eigenvalues().cwiseAbs().maxCoeff();
  CHECK(specRad < 1.0);

  // bitwise reproducibility for a fixed seed, variation across seeds
  CHECK((g1.L - g2.L).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g1.gains.K[0] - g2.gains.K[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g1.L - g3.L).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("synthesis rejects malformed configurations") {
  const polyrpi::LpvProblem problem = fixtures::makeExample1Lti();
  polyrpi::SynthesisConfig good;
  good.lr = 9;
  good.theta = 0.0;
  good.directions = freeInputDirections();

  auto expectInvalid = [&](auto mutate) {
    polyrpi::SynthesisConfig cfg = good;
    mutate(cfg);
    CHECK_THROWS_AS(polyrpi::synthesize(problem, cfg), polyrpi::InvalidConfig);
  };

  // complexity must exceed the augmented state dimension
  expectInvalid([](polyrpi::SynthesisConfig& c) { c.lr = 3; });
  expectInvalid([](polyrpi::SynthesisConfig& c) { c.lr = 5; });  // below the box row count
  expectInvalid([](polyrpi::SynthesisConfig& c) { c.theta = -0.1; });
  expectInvalid([](polyrpi::SynthesisConfig& c) { c.theta = 1.2; });
  // growth objective without directions is undefined
  expectInvalid([](polyrpi::SynthesisConfig& c) { c.directions.clear(); });
  expectInvalid([](polyrpi::SynthesisConfig& c) { c.directions[0].psiX = VectorXd::Ones(3); });
  expectInvalid(
      [](polyrpi::SynthesisConfig& c) { c.directions[0].psiU = VectorXd::Ones(2); });
  expectInvalid([](polyrpi::SynthesisConfig& c) { c.starts = 0; });
  expectInvalid([](polyrpi::SynthesisConfig& c) { c.maxSweeps = 0; });
  expectInvalid([](polyrpi::SynthesisConfig& c) { c.stallTol = 0.0; });
  expectInvalid([](polyrpi::SynthesisConfig& c) { c.eps1 = 1.0; });
  expectInvalid([](polyrpi::SynthesisConfig& c) { c.threads = -1; });

  CHECK(polyrpi::designObjective(0.25, VectorXd::Constant(2, 4.0),
                                 VectorXd::Constant(4, 0.5)) ==
        doctest::Approx(0.75 * 4.0 - 0.25 * 0.5));
  CHECK(polyrpi::designObjective(1.0, VectorXd(), VectorXd::Constant(2, 0.25)) ==
        doctest::Approx(-0.25));
}

TEST_CASE("alternating search designs a certifiable double-integrator controller") {
  const polyrpi::LpvProblem problem = fixtures::makeExample1Lti();
  polyrpi::SynthesisConfig cfg;
  cfg.lr = 9;
  cfg.theta = 0.0;
  cfg.directions = freeInputDirections();
  cfg.starts = 4;
  cfg.maxSweeps = 12;
  cfg.seed = 2026;

  const polyrpi::SynthesisResult result = polyrpi::synthesize(problem, cfg);

  REQUIRE(result.bestStart >= 0);
  CHECK(result.starts.size() == 4);
  const polyrpi::StartReport& bestRep = result.starts[result.bestStart];
  CHECK(bestRep.feasible);
  CHECK(bestRep.residual.maxResidual() <= 1e-6);
  CHECK(bestRep.lambda < 1.0);
  for (const auto& rep : result.starts) checkMonotoneHistory(rep);

  // the winner must dominate every other feasible start
  for (const auto& rep : result.starts) {
    if (!rep.feasible) continue;
    CHECK(bestRep.objective >= rep.objective);
  }

  // independent certification from just (gains, L, rho)
  const polyrpi::Certificate cert =
      polyrpi::certify(problem, result.best.gains, result.best.L, result.best.rho);
  CHECK(cert.certified);
  CHECK(cert.lambdaStar < 1.0);

  // a genuinely two-dimensional invariant set in the state plane
  CHECK(stateProjectionArea(result.best.L) >= 1.0);
  CHECK(result.best.gammas.minCoeff() > 0.0);
}

TEST_CASE("theta=1 ignores the direction set") {
  const polyrpi::LpvProblem problem = fixtures::makeExample1Lti();
  polyrpi::SynthesisConfig cfg;
  cfg.lr = 9;
  cfg.theta = 1.0;
  cfg.starts = 2;
  cfg.maxSweeps = 8;
  cfg.seed = 5;

  polyrpi::SynthesisConfig cfgA = cfg;
  cfgA.directions = freeInputDirections();
  polyrpi::SynthesisConfig cfgB = cfg;
  cfgB.directions = {{Eigen::Vector2d(1, 0), Eigen::VectorXd::Zero(1)},
                     {Eigen::Vector2d(0, 1), Eigen::VectorXd::Zero(1)}};

  const polyrpi::SynthesisResult ra = polyrpi::synthesize(problem, cfgA);
  const polyrpi::SynthesisResult rb = polyrpi::synthesize(problem, cfgB);
  CHECK(std::abs(ra.best.rho.sum() - rb.best.rho.sum()) <= 1e-6);

  // shrink objective actually pulls the ultimate bound well below its start
  CHECK(ra.best.rho.mean() < 0.5);
  // reported scalings still satisfy their constraint rows
  const polyrpi::AugmentedSystem aug = polyrpi::augment(problem);
  const polyrpi::ResidualReport rep =
      polyrpi::residuals(problem, aug, polyrpi::buildGrids(aug, ra.best.gains), ra.best);
  CHECK(rep.maxResidual() <= 1e-6);
}

TEST_CASE("synthesized scalar designs certify end to end") {
  const polyrpi::LpvProblem problem = makeScalarPlant(0.5, 0.1, 1.0);
  polyrpi::SynthesisConfig cfg;
  cfg.lr = 4;
  cfg.theta = 0.5;
  cfg.directions = {{VectorXd::Ones(1), {}},
                    {-VectorXd::Ones(1), 0.5 * VectorXd::Ones(1)}};
  cfg.starts = 3;
  cfg.maxSweeps = 10;
  cfg.seed = 11;

  const polyrpi::SynthesisResult result = polyrpi::synthesize(problem, cfg);
  REQUIRE(result.bestStart >= 0);
  const polyrpi::Certificate cert =
      polyrpi::certify(problem, result.best.gains, result.best.L, result.best.rho);
  CHECK(cert.certified);
  CHECK(cert.lambdaStar < 1.0);

  // free input parts stay inside their box; scalings positive
  REQUIRE(result.best.psis.size() == 2);
  CHECK(result.best.gammas.minCoeff() > 0.0);
  CHECK(std::abs(result.best.psis[0](1)) <= 1.0 + 1e-9);
  CHECK(result.best.psis[1](1) == doctest::Approx(0.5));
}

TEST_CASE("impossible plants raise NoFeasibleStart") {
  // x+ = 2x + p with zero input gain: no bounded invariant set can exist
  const polyrpi::LpvProblem problem = makeScalarPlant(2.0, 0.0, 1.0);
  polyrpi::SynthesisConfig cfg;
  cfg.lr = 4;
  cfg.theta = 0.0;
  cfg.directions = {{VectorXd::Ones(1), {}}};
  cfg.starts = 2;
  cfg.maxSweeps = 6;

  CHECK_THROWS_AS(polyrpi::synthesize(problem, cfg), polyrpi::NoFeasibleStart);
}

TEST_CASE("thread count does not change the result") {
  const polyrpi::LpvProblem problem = fixtures::makeExample1Lti();
  polyrpi::SynthesisConfig cfg;
  cfg.lr = 7;
  cfg.theta = 1.0;
  cfg.starts = 3;
  cfg.maxSweeps = 6;
  cfg.seed = 99;

  polyrpi::SynthesisConfig seq = cfg;
  seq.threads = 1;
  polyrpi::SynthesisConfig par = cfg;
  par.threads = 3;

  const polyrpi::SynthesisResult a = polyrpi::synthesize(problem, seq);
  const polyrpi::SynthesisResult b = polyrpi::synthesize(problem, par);
  CHECK(a.bestStart == b.bestStart);
  CHECK((a.best.L - b.best.L).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.best.rho - b.best.rho).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.best.lambda == b.best.lambda);
}
