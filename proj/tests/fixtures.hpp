#pragma once

// Shared benchmark problems used across the test suite:
//  - a double integrator with an input gain b (LTI at b = 2, or LPV with
//    b in [2, 2.25] plus a control-rate constraint), and
//  - a four-vertex coupled-tank model with two measured outputs, together
//    with a published invariant-set solution used as certification input.

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "polyrpi/plant.hpp"

namespace fixtures {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

inline polyrpi::HPolyhedron doubleIntegratorStateSet() {
  MatrixXd X(4, 2);
  X << 0.8, 0, 0, 1, -1, 0, 0, -1;  // -1 <= x1 <= 1.25, |x2| <= 1
  return polyrpi::HPolyhedron(X, VectorXd::Ones(4));
}

inline polyrpi::LpvProblem makeDoubleIntegrator(const std::vector<double>& bValues,
                                                bool rateConstraint) {
  std::vector<MatrixXd> av, bv, bpv;
  for (double b : bValues) {
    MatrixXd A(2, 2);
    A << 1, 1, 0, 1;
    av.push_back(A);
    MatrixXd B(2, 1);
    B << b, 1;
    bv.push_back(B);
    MatrixXd Bp(2, 1);
    Bp << 1, 1;
    bpv.push_back(Bp);
  }

  MatrixXd C(1, 2);
  C << 1, 0;
  MatrixXd Deta(1, 1);
  Deta << 1;

  MatrixXd Umat(2, 1);
  Umat << 1, -1.25;  // -0.8 <= u <= 1
  MatrixXd PN(2, 1);
  PN << 10, -10;  // |p| <= 0.1, |eta| <= 0.1

  std::optional<polyrpi::HPolyhedron> Udelta;
  if (rateConstraint) {
    MatrixXd Ud(2, 1);
    Ud << 1.6667, -1.1111;  // -0.9 <= du <= 0.6
    Udelta = polyrpi::HPolyhedron(Ud, VectorXd::Ones(2));
  }

  return polyrpi::LpvProblem{polyrpi::MatrixPolytope(av),
                             polyrpi::MatrixPolytope(bv),
                             polyrpi::MatrixPolytope(bpv),
                             C,
                             Deta,
                             doubleIntegratorStateSet(),
                             polyrpi::HPolyhedron(Umat, VectorXd::Ones(2)),
                             Udelta,
                             polyrpi::HPolyhedron(PN, VectorXd::Ones(2)),
                             polyrpi::HPolyhedron(PN, VectorXd::Ones(2))};
}

inline polyrpi::LpvProblem makeExample1Lti() { return makeDoubleIntegrator({2.0}, false); }

inline polyrpi::LpvProblem makeExample1Lpv() {
  return makeDoubleIntegrator({2.0, 2.25}, true);
}

// Reach directions for the double integrator: the four vertices of the state
// box plus its four face normals, with the input component left free.
inline std::vector<Vector2d> doubleIntegratorDirections() {
  return {Vector2d(-1, -1),  Vector2d(-1, 1), Vector2d(1.25, -1), Vector2d(1.25, 1),
          Vector2d(0.8, 0), Vector2d(0, 1),  Vector2d(-1, 0),    Vector2d(0, -1)};
}

inline polyrpi::LpvProblem makeExample2() {
  auto mat2 = [](double a11, double a12, double a21, double a22) {
    MatrixXd A(2, 2);
    A << a11, a12, a21, a22;
    return A;
  };
  std::vector<MatrixXd> av = {mat2(0.9886, 0.0000, 0.0112, 0.9886),
                              mat2(0.9886, 0.0000, 0.0112, 0.9840),
                              mat2(0.9840, 0.0000, 0.0158, 0.9886),
                              mat2(0.9840, 0.0000, 0.0158, 0.9840)};

  MatrixXd B(2, 1);
  B << 0.0179, 0.0001;
  std::vector<MatrixXd> bv(4, B), bpv(4, B);

  MatrixXd C = MatrixXd::Identity(2, 2);
  MatrixXd Deta = MatrixXd::Identity(2, 2);

  MatrixXd X(4, 2);
  X << -0.2, 0, 0.2, 0, 0, -0.2, 0, 0.2;  // |x_i| <= 5
  MatrixXd Umat(2, 1);
  Umat << -0.25, 0.25;  // |u| <= 4
  MatrixXd Ud(2, 1);
  Ud << -0.5, 0.5;  // |du| <= 2
  MatrixXd P(2, 1);
  P << -3.9, 3.9;  // |p| <= 0.2564
  MatrixXd N(4, 2);
  N << -50, 0, 50, 0, 0, -50, 0, 50;  // |eta_i| <= 0.02

  return polyrpi::LpvProblem{polyrpi::MatrixPolytope(av),
                             polyrpi::MatrixPolytope(bv),
                             polyrpi::MatrixPolytope(bpv),
                             C,
                             Deta,
                             polyrpi::HPolyhedron(X, VectorXd::Ones(4)),
                             polyrpi::HPolyhedron(Umat, VectorXd::Ones(2)),
                             polyrpi::HPolyhedron(Ud, VectorXd::Ones(2)),
                             polyrpi::HPolyhedron(P, VectorXd::Ones(2)),
                             polyrpi::HPolyhedron(N, VectorXd::Ones(4))};
}

// Published coupled-tank solution (5-decimal precision): the invariant-set
// matrix L, the inner-set scaling rho, and the per-vertex feedback gains.
struct Example2Solution {
  MatrixXd L;                   // 12 x 3
  VectorXd rho;                 // 12
  std::vector<MatrixXd> K;      // 1 x 2 per vertex
  std::vector<MatrixXd> Kbar;   // 1 x 1 per vertex
  std::vector<MatrixXd> Khat;   // 1 x 2 per vertex
};

inline Example2Solution example2Published() {
  Example2Solution s;
  s.L.resize(12, 3);
  s.L << 0.03744, 0.17477, 0.00286,    //
      -0.20000, 0.00000, 0.00000,      //
      -0.03741, -0.17477, -0.00286,    //
      0.00000, -0.20000, 0.00000,      //
      0.00000, 0.00000, 0.25000,       //
      0.00000, 0.20000, 0.00000,       //
      0.20000, 0.00000, 0.00000,       //
      -0.19202, 0.00000, -0.01522,     //
      -0.02041, -0.18674, -0.00015,    //
      0.00000, 0.00000, -0.25000,      //
      0.19202, 0.00000, 0.01522,       //
      0.02041, 0.18674, 0.00015;
  s.rho.resize(12);
  s.rho << 0.05028, 0.03775, 0.05028, 0.05027, 0.04236, 0.05027, 0.03775, 0.03415, 0.05055,
      0.04236, 0.03415, 0.05055;

  MatrixXd k12(1, 2), k3(1, 2), k4(1, 2), khat(1, 2);
  k12 << -1.02e-5, 0.08e-5;
  k3 << -9.38e-4, -0.20e-4;
  k4 << 3.41e-2, -0.018e-2;
  khat << -0.20, 0.00;
  s.K = {k12, k12, k3, k4};

  MatrixXd kbar123(1, 1), kbar4(1, 1);
  kbar123 << -0.2496;
  kbar4 << -0.2526;
  s.Kbar = {kbar123, kbar123, kbar123, kbar4};
  s.Khat = {khat, khat, khat, khat};
  return s;
}

}  // namespace fixtures
