#pragma once

#include <Eigen/Dense>

#include <limits>
#include <string>
#include <vector>

#include "polyrpi/closed_loop.hpp"
#include "polyrpi/conditions.hpp"
#include "polyrpi/plant.hpp"
#include "polyrpi/polyhedron.hpp"

namespace polyrpi {

struct CertificateIssue {
  std::string code;     // stable identifier, e.g. "ultimate-bound"
  std::string detail;   // human-readable location and numbers
};

// Independent verification of a candidate design (gains, L, rho): every
// multiplier is re-derived from scratch by row-wise linear programs, so the
// verdict depends only on the problem data and the candidate, not on how it
// was synthesized.
struct Certificate {
  bool certified = false;
  std::vector<CertificateIssue> issues;

  // Smallest contraction factor achievable by multipliers that also respect
  // the ultimate-bound rows; this is the factor the verdict uses.
  double lambdaStar = std::numeric_limits<double>::infinity();
  // Smallest contraction factor ignoring the ultimate-bound coupling. By
  // duality this equals the worst-case one-step support value over the set.
  double contractionWorstCase = std::numeric_limits<double>::infinity();
  // Worst slack of the ultimate-bound rows, <= 0 when satisfiable. Dual to
  // the one-step support value over the inner (rho-scaled) set.
  double ultimateMargin = std::numeric_limits<double>::infinity();
  // Largest recovered row sum for the state/input inclusion, <= 1 required.
  double inclusionMargin = 0.0;
  // Largest recovered row sum for increment admissibility, <= 1 required;
  // stays 0 when the problem has no increment constraint set.
  double rateMargin = 0.0;

  double leftInverseResidual = 0.0;
  double eps1 = 0.995;
  // Steps after which any trajectory from the outer set has entered the
  // inner set (contraction rate eps1); -1 when rho makes it undefined.
  int kTilde = -1;
  int worstRow = -1;   // L row attaining lambdaStar
  int worstPair = -1;  // flat vertex-pair index (rowVertex * nv + colVertex)

  // Fully assembled candidate with the recovered multipliers, plus the
  // residual report of re-checking it through the condition evaluator.
  CandidateSolution candidate;
  ResidualReport recheck;

  bool hasIssue(const std::string& code) const;
};

// Recovers all multipliers for (gains, L, rho) by LPs and checks every
// invariance, inclusion, and admissibility condition at tolerance tol.
// Throws RankDeficientL when L has no left inverse (rank < nxi).
Certificate certify(const LpvProblem& problem, const GainSchedule& gains,
                    const Eigen::MatrixXd& L, const Eigen::VectorXd& rho,
                    double tol = 1e-6, double eps1 = 0.995);

// Worst-case bound on the number of steps to reach {L xi <= rho} from
// {L xi <= 1} under per-step contraction lambdaTilde of the scaled set.
// Throws ZeroRho when some rho entry is <= 1e-12 (bound undefined) and
// InvalidConfig for lambdaTilde outside (0, 1).
int finiteStepBound(const Eigen::MatrixXd& L, const Eigen::VectorXd& rho,
                    double lambdaTilde);

// Direct one-step worst case over the sets themselves (no multipliers):
// support values of the closed-loop image over {L xi <= 1} x disturbances
// and over {L xi <= rho} x disturbances. Dual counterpart of the
// multiplier-recovery path in certify().
struct WorstCaseReport {
  // max over rows/pairs of the one-step support at level one; the set is
  // lambda-contractive iff this is <= lambda.
  double contractionValue = 0.0;
  int contractionRow = -1;
  int contractionPair = -1;
  // max over rows/pairs of (one-step support at level rho) - eps1 * rho_r;
  // the inner set is invariant with margin eps1 iff this is <= 0.
  double ultimateValue = -std::numeric_limits<double>::infinity();
  int ultimateRow = -1;
  int ultimatePair = -1;
};

// Throws UnboundedSet when {L xi <= 1} or the disturbance set is unbounded,
// ZeroRho for nonpositive rho entries.
WorstCaseReport oneStepWorstCase(const ClosedLoopGrids& grids,
                                 const HPolyhedron& disturbances,
                                 const Eigen::MatrixXd& L, const Eigen::VectorXd& rho,
                                 double eps1 = 0.995);

}  // namespace polyrpi
