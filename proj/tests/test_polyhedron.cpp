#include "polyrpi/polyhedron.hpp"

#include <doctest.h>

#include <cmath>

#include "polyrpi/errors.hpp"
#include "test_util.hpp"

using namespace polyrpi;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Random bounded 2-D polyhedron containing the origin: rows sampled on the
// unit circle, bounds in [0.5, 2], plus a wide box to force boundedness.
HPolyhedron randomBounded2d(testutil::Rng& rng) {
  const int extra = rng.uniformInt(1, 6);
  MatrixXd P(4 + extra, 2);
  VectorXd phi(4 + extra);
  P.topRows(4) << 1, 0, -1, 0, 0, 1, 0, -1;
  phi.head(4).setConstant(rng.uniform(1.0, 3.0));
  for (int i = 0; i < extra; ++i) {
    const double a = rng.uniform(0.0, 6.283185307179586);
    P.row(4 + i) << std::cos(a), std::sin(a);
    phi(4 + i) = rng.uniform(0.5, 2.0);
  }
  return HPolyhedron(P, phi);
}

}  // namespace

TEST_CASE("polyhedron: construction guards") {
  MatrixXd P(1, 2);
  P << 1, 0;
  CHECK_THROWS_AS((HPolyhedron(P, VectorXd::Zero(1))), InvalidProblem);
  CHECK_THROWS_AS((HPolyhedron(P, -VectorXd::Ones(1))), InvalidProblem);
  CHECK_THROWS_AS((HPolyhedron(MatrixXd::Zero(1, 2), VectorXd::Ones(1))), InvalidProblem);
  CHECK_THROWS_AS((HPolyhedron(P, VectorXd::Ones(2))), InvalidDimension);
}

TEST_CASE("polyhedron: contains and normalized") {
  MatrixXd P(2, 1);
  P << 2.0, -1.0;
  VectorXd phi(2);
  phi << 4.0, 1.0;  // -1 <= x <= 2
  const HPolyhedron h(P, phi);
  CHECK(h.contains(VectorXd::Constant(1, 1.9)));
  CHECK(!h.contains(VectorXd::Constant(1, 2.1)));
  const HPolyhedron n = h.normalized();
  CHECK(n.phi()(0) == 1.0);
  CHECK(n.P()(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("containment: nested boxes recover a multiplier certificate") {
  const HPolyhedron inner = HPolyhedron::unitBox(2);
  const HPolyhedron outer =
      HPolyhedron::box(VectorXd::Constant(2, -2.0), VectorXd::Constant(2, 2.0));
  const auto r = checkContainment(inner, outer);
  REQUIRE(r.contained);
  CHECK(r.eqResidual <= 1e-8);
  CHECK(r.ineqResidual <= 1e-8);
  CHECK(r.Q.minCoeff() >= 0.0);

  const auto rev = checkContainment(outer, inner);
  CHECK(!rev.contained);
  CHECK(rev.violatedRow >= 0);
}

TEST_CASE("containment: agrees with the vertex oracle on random 2-D pairs") {
  testutil::Rng rng(777);
  int containedSeen = 0;
  for (int it = 0; it < 40; ++it) {
    const HPolyhedron a = randomBounded2d(rng);
    // Half the pairs dilate `a` itself so both outcomes occur frequently.
    const HPolyhedron b = (it % 2 == 0)
                              ? randomBounded2d(rng)
                              : HPolyhedron(a.P(), a.phi() * rng.uniform(1.0, 1.5));
    const auto res = checkContainment(a, b);
    // Oracle: containment of polytopes is containment of the inner vertices.
    bool oracle = true;
    for (const auto& v : enumerateVertices(a)) {
      if (!b.contains(v, 1e-9)) {
        oracle = false;
        break;
      }
    }
    INFO("pair ", it);
    CHECK(res.contained == oracle);
    if (res.contained) {
      ++containedSeen;
      CHECK(res.eqResidual <= 1e-8);
      CHECK(res.ineqResidual <= 1e-8);
      CHECK(res.Q.minCoeff() >= 0.0);
    }
  }
  CHECK(containedSeen >= 15);  // sanity: both outcomes exercised
}

TEST_CASE("containment: unbounded inner set is reported via a witness row") {
  MatrixXd P(2, 2);
  P << 1, 0, -1, 0;  // |x| <= 1, y free: unbounded strip
  const HPolyhedron strip(P, VectorXd::Ones(2));
  const auto r = checkContainment(strip, HPolyhedron::unitBox(2));
  CHECK(!r.contained);
  CHECK(r.violatedRow >= 0);
}

TEST_CASE("vertex enumeration: asymmetric state box") {
  MatrixXd P(4, 2);
  P << 0.8, 0, 0, 1, -1, 0, 0, -1;
  const HPolyhedron box(P, VectorXd::Ones(4));
  const auto verts = enumerateVertices(box);
  REQUIRE(verts.size() == 4);
  // Lexicographic order: (-1,-1), (-1,1), (1.25,-1), (1.25,1).
  CHECK(verts[0](0) == doctest::Approx(-1.0));
  CHECK(verts[0](1) == doctest::Approx(-1.0));
  CHECK(verts[1](1) == doctest::Approx(1.0));
  CHECK(verts[2](0) == doctest::Approx(1.25));
  CHECK(verts[3](0) == doctest::Approx(1.25));
  CHECK(verts[3](1) == doctest::Approx(1.0));
}

TEST_CASE("vertex enumeration: guards") {
  MatrixXd P(2, 2);
  P << 1, 0, -1, 0;
  CHECK_THROWS_AS(enumerateVertices(HPolyhedron(P, VectorXd::Ones(2))), UnboundedSet);
  CHECK_THROWS_AS(enumerateVertices(HPolyhedron::unitBox(5)), UnsupportedDimension);
}

TEST_CASE("volume: exact low-dimensional values") {
  MatrixXd P(4, 2);
  P << 0.8, 0, 0, 1, -1, 0, 0, -1;
  const auto a = volume(HPolyhedron(P, VectorXd::Ones(4)));
  CHECK(a.value == doctest::Approx(4.5).epsilon(1e-9));
  CHECK(a.stderror == 0.0);

  CHECK(volume(HPolyhedron::unitBox(1)).value == doctest::Approx(2.0));
  CHECK(volume(HPolyhedron::unitBox(3)).value == doctest::Approx(8.0).epsilon(1e-9));

  // Simplex-like corner cut: cube with x+y+z <= 1 keeps 8 - 9/6... compute via
  // a direct difference instead: cut the positive corner off the unit cube.
  MatrixXd Pc(7, 3);
  Pc << Eigen::Matrix3d::Identity(), -Eigen::Matrix3d::Identity(),
      Eigen::RowVector3d(1, 1, 1);
  VectorXd pc(7);
  pc << 1, 1, 1, 1, 1, 1, 2.5;
  // Removed corner is the simplex {x+y+z >= 2.5, x,y,z <= 1}: volume (0.5)^3/6.
  const auto cut = volume(HPolyhedron(Pc, pc));
  CHECK(cut.value == doctest::Approx(8.0 - 0.125 / 6.0).epsilon(1e-9));
}

TEST_CASE("volume: 4-D Monte Carlo brackets the hypercube") {
  const auto v = volume(HPolyhedron::unitBox(4), 12345, 400000);
  CHECK(v.stderror == 0.0);  // box equals its own bounding box: stderr collapses
  CHECK(v.value == doctest::Approx(16.0).epsilon(1e-6));

  // Cross-polytope |x|_1 <= 1: volume 2^4/4! = 0.6667.
  MatrixXd P(16, 4);
  int r = 0;
  for (int s0 : {1, -1})
    for (int s1 : {1, -1})
      for (int s2 : {1, -1})
        for (int s3 : {1, -1}) P.row(r++) << s0, s1, s2, s3;
  const auto c = volume(HPolyhedron(P, VectorXd::Ones(16)), 2024, 400000);
  CHECK(c.samples >= 400000);
  CHECK(std::abs(c.value - 16.0 / 24.0) <= 4.0 * c.stderror + 1e-6);
}

TEST_CASE("project: supports match the lifted supports") {
  testutil::Rng rng(31);
  // Random bounded 3-D set, project to (x0, x1).
  MatrixXd P(10, 3);
  VectorXd phi(10);
  P.topRows(6) << Eigen::MatrixXd::Identity(3, 3), -Eigen::MatrixXd::Identity(3, 3);
  phi.head(6).setConstant(2.0);
  for (int i = 6; i < 10; ++i) {
    VectorXd d = rng.vector(3, -1.0, 1.0);
    while (d.norm() < 0.3) d = rng.vector(3, -1.0, 1.0);
    P.row(i) = d.normalized().transpose();
    phi(i) = rng.uniform(0.8, 1.8);
  }
  const HPolyhedron full(P, phi);
  const HPolyhedron proj = project(full, {0, 1});
  REQUIRE(proj.ambientDim() == 2);
  for (int it = 0; it < 25; ++it) {
    const double a = rng.uniform(0.0, 6.283185307179586);
    VectorXd d2(2), d3(3);
    d2 << std::cos(a), std::sin(a);
    d3 << d2(0), d2(1), 0.0;
    CHECK(std::abs(supportValue(proj, d2) - supportValue(full, d3)) <= 1e-7);
  }
}

TEST_CASE("project: keepDims order is respected") {
  MatrixXd P(6, 3);
  P << Eigen::MatrixXd::Identity(3, 3), -Eigen::MatrixXd::Identity(3, 3);
  VectorXd phi(6);
  phi << 1, 2, 3, 1, 2, 3;  // |x|<=1, |y|<=2, |z|<=3
  const HPolyhedron box(P, phi);
  const HPolyhedron zy = project(box, {2, 1});
  CHECK(supportValue(zy, Eigen::Vector2d(1, 0)) == doctest::Approx(3.0));
  CHECK(supportValue(zy, Eigen::Vector2d(0, 1)) == doctest::Approx(2.0));
}

TEST_CASE("removeRedundancy drops implied rows only") {
  MatrixXd P(5, 2);
  P << 1, 0, -1, 0, 0, 1, 0, -1, 1, 0;  // duplicated x <= bound with slack
  VectorXd phi(5);
  phi << 1, 1, 1, 1, 2;  // last row x <= 2 implied by x <= 1
  const HPolyhedron r = removeRedundancy(HPolyhedron(P, phi));
  CHECK(r.numRows() == 4);
  CHECK(volume(r).value == doctest::Approx(4.0));
}

TEST_CASE("isBounded distinguishes boxes from strips") {
  CHECK(isBounded(HPolyhedron::unitBox(3)));
  MatrixXd P(2, 2);
  P << 1, 0, -1, 0;
  CHECK(!isBounded(HPolyhedron(P, VectorXd::Ones(2))));
}
