#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "polyrpi/matrix_polytope.hpp"
#include "polyrpi/polyhedron.hpp"

namespace polyrpi {

// Discrete-time LPV plant
//   x+ = A(a) x + B(a) u + Bp(a) p,   y = C x + Deta eta,
// with polytopic parameter dependence (common vertex count) and constraint
// sets given as H-reps with unit bound vectors. Udelta absent means the
// control increment is unconstrained.
struct LpvProblem {
  MatrixPolytope A, B, Bp;
  Eigen::MatrixXd C, Deta;
  HPolyhedron X, U;
  std::optional<HPolyhedron> Udelta;
  HPolyhedron Pset, Nset;  // process and measurement noise sets

  int nx() const { return A.rows(); }
  int nu() const { return B.cols(); }
  int np() const { return Bp.cols(); }
  int ny() const { return static_cast<int>(C.rows()); }
  int neta() const { return static_cast<int>(Deta.cols()); }
  int nv() const { return A.numVertices(); }
  int nxi() const { return nx() + nu(); }
  int ndist() const { return np() + 2 * neta(); }

  int lx() const { return X.numRows(); }
  int lu() const { return U.numRows(); }
  int lud() const { return Udelta ? Udelta->numRows() : 0; }
  int lP() const { return Pset.numRows(); }
  int lN() const { return Nset.numRows(); }
  int lxi() const { return lx() + lu(); }
  int ldist() const { return lP() + 2 * lN(); }
};

struct ValidationIssue {
  std::string code;
  std::string message;
};

struct ValidationReport {
  bool ok = true;
  int numVertices = 0;
  std::vector<ValidationIssue> issues;
};

// Dimension consistency, unit bounds, and boundedness of every constraint
// and disturbance set (the origin-interior property is enforced by the
// HPolyhedron type itself).
ValidationReport validate(const LpvProblem& problem);

// Augmented plant driven by the control increment: state xi = (x, u),
// disturbance d+ = (p, eta, eta+), extended output (y, u, y+).
struct AugmentedSystem {
  MatrixPolytope Aaug;        // [A_i B_i; 0 I]
  Eigen::MatrixXd Baug;       // [0; I]
  MatrixPolytope Bpaug;       // [Bp_i; 0]
  Eigen::MatrixXd Caug;       // [[C,0,0],[0,I,0],[0,0,C]] on (xi, x+)
  Eigen::MatrixXd Detaaug;    // [Deta; 0; 0]
  HPolyhedron Xi;             // blkdiag(X, U) xi <= 1
  HPolyhedron Dbig;           // blkdiag(P, N, N) d+ <= 1
};

// Throws InvalidProblem when validate() reports issues.
AugmentedSystem augment(const LpvProblem& problem);

}  // namespace polyrpi
