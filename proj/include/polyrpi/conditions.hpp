#pragma once

#include <Eigen/Dense>

#include <vector>

#include "polyrpi/closed_loop.hpp"
#include "polyrpi/plant.hpp"

namespace polyrpi {

// A full candidate design: the invariant-set matrix L with inner scaling rho,
// the gain schedule, and every multiplier witnessing the algebraic
// invariance/admissibility conditions. Multiplier matrices H, V, Q, T are the
// stacked vertex-pair grids (block row = successor-parameter vertex, block
// column = current-parameter vertex).
struct CandidateSolution {
  Eigen::MatrixXd L;       // l_r x nxi
  Eigen::VectorXd rho;     // l_r, componentwise in [0, 1]
  double lambda = 0.0;     // contraction factor, in [0, 1)
  double eps1 = 0.995;     // ultimate-bound contraction margin, in (0, 1)
  GainSchedule gains;

  Eigen::MatrixXd H;  // nv*l_r x nv*l_r, nonnegative
  Eigen::MatrixXd V;  // nv*l_r x nv*l_d, nonnegative
  Eigen::MatrixXd G;  // l_xi x l_r,     nonnegative
  Eigen::MatrixXd Q;  // nv*l_ud x nv*l_r, nonnegative (empty without rate set)
  Eigen::MatrixXd T;  // nv*l_ud x nv*l_d, nonnegative (empty without rate set)
  Eigen::MatrixXd J;  // nxi x l_r, left inverse of L

  Eigen::VectorXd gammas;            // one scaling per reach direction
  std::vector<Eigen::VectorXd> psis;  // reach directions, nxi each
};

// Max violation per algebraic condition: equalities report the largest
// absolute defect, inequalities the largest positive part.
struct ResidualReport {
  double stateUpdateEq = 0;     // H (I x L)        = (I x L) Acl
  double distUpdateEq = 0;      // V (I x D)        = (I x L) Bcl
  double contraction = 0;       // H 1 + V 1       <= lambda 1
  double ultimateBound = 0;     // H rho + V 1     <= eps1 rho
  double stateInclusionEq = 0;  // G L              = Xi
  double stateInclusionSum = 0; // G 1             <= 1
  double rateStateEq = 0;       // Q (I x L)        = (I x Ud) Adu
  double rateDistEq = 0;        // T (I x D)        = (I x Ud) Bdu
  double rateSum = 0;           // Q 1 + T 1       <= 1
  double leftInverse = 0;       // J L              = I
  double directions = 0;        // gamma_t L psi_t <= 1
  double domain = 0;            // nonnegativity of multipliers, rho in [0,1]

  int worstPair = -1;  // flat vertex-pair index (rowVertex * nv + colVertex)

  double maxResidual() const;
  bool feasible(double tol) const;
};

// Evaluates every condition in the stacked big-matrix form.
ResidualReport residuals(const LpvProblem& problem, const AugmentedSystem& aug,
                         const ClosedLoopGrids& grids, const CandidateSolution& cand);

// Evaluates the same conditions pair-by-pair (the sandwiched form at simplex
// vertices); agrees with residuals() up to regrouping.
ResidualReport residualsVertexPairForm(const LpvProblem& problem, const AugmentedSystem& aug,
                                       const ClosedLoopGrids& grids,
                                       const CandidateSolution& cand);

}  // namespace polyrpi
