#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "polyrpi/closed_loop.hpp"
#include "polyrpi/conditions.hpp"
#include "polyrpi/plant.hpp"

namespace polyrpi {

// One reach direction used by the enlargement term of the design objective.
// The state part is always prescribed; the input part is either prescribed
// too, or (when psiU is empty) handed to the optimizer as an extra degree of
// freedom, bounded componentwise by SynthesisConfig::psiUBound.
struct DirectionSpec {
  Eigen::VectorXd psiX;  // nx
  Eigen::VectorXd psiU;  // nu when fixed, empty when optimized

  bool freeU() const { return psiU.size() == 0; }
};

struct SynthesisConfig {
  int lr = 0;         // rows of L; must exceed the augmented state dimension
  double theta = 0.0; // 0: grow the invariant set only, 1: shrink the
                      // ultimate-bound set only
  std::vector<DirectionSpec> directions;

  // Variable boxes for the search (multipliers and scalings are nonnegative).
  double multiplierBound = 100.0;   // H, V, G, Q, T, gamma_t upper bound
  double gainBound = 100.0;         // |K|, |Kbar|, |Khat|, |L| entry bound
  double leftInverseBound = 1000.0; // |J| entry bound
  double psiUBound = 1.0;           // |psi_u| bound for free input parts

  int starts = 16;
  int maxSweeps = 60;
  double stallTol = 1e-6;  // stop a start when the objective gain per sweep
                           // falls below this
  std::uint64_t seed = 0;
  double eps1 = 0.995;     // ultimate-bound contraction margin
  int threads = 0;         // worker threads across starts; 0 = hardware
};

// (1 - theta) * mean(gammas) - theta * mean(rho); the gamma term is dropped
// when there are no directions.
double designObjective(double theta, const Eigen::VectorXd& gammas,
                       const Eigen::VectorXd& rho);

// Flat packing of a gain schedule: K_0..K_{nv-1}, Kbar_0..Kbar_{nv-1},
// Khat_0..Khat_{nv-1}, each row-major. Gives the gain entries a stable
// coordinate system for the linear programs below.
struct GainLayout {
  int nv = 0, nu = 0, ny = 0;

  int size() const { return nv * (2 * nu * ny + nu * nu); }
  int kOffset(int v) const { return v * nu * ny; }
  int kbarOffset(int v) const { return nv * nu * ny + v * nu * nu; }
  int khatOffset(int v) const { return nv * (nu * ny + nu * nu) + v * nu * ny; }

  Eigen::VectorXd pack(const GainSchedule& gains) const;
  GainSchedule unpack(const Eigen::VectorXd& g) const;
};

// A matrix whose entries are affine in the packed gain vector g:
//   entry (i, k) = base(i, k) + coef.row(i * cols + k) . g.
struct AffineMatrixMap {
  Eigen::MatrixXd base;
  Eigen::MatrixXd coef;  // (rows*cols) x layout.size()

  Eigen::MatrixXd at(const Eigen::VectorXd& g) const;
};

// For a frozen set matrix L: the products L*Acl, L*Bcl (and Ud*Adu, Ud*Bdu
// when a control-rate set is present) of every vertex pair, expressed as
// affine functions of the gain entries. This is what keeps the gain block of
// the alternating search linear. Pair index = rowVertex * nv + colVertex.
struct FrozenGainMaps {
  GainLayout layout;
  std::vector<AffineMatrixMap> LAcl, LBcl;
  std::vector<AffineMatrixMap> UdAdu, UdBdu;  // empty without a rate set
};

FrozenGainMaps buildFrozenGainMaps(const LpvProblem& problem, const AugmentedSystem& aug,
                                   const Eigen::MatrixXd& L);

// One alternating sweep: objective = designObjective of the incumbent after
// the sweep, violation = total elastic slack (0 once the start is feasible).
struct SweepRecord {
  int sweep = 0;
  double objective = 0.0;
  double violation = 0.0;
};

struct StartReport {
  int index = -1;
  std::uint64_t seed = 0;
  bool feasible = false;
  double objective = 0.0;
  double lambda = 0.0;
  double bestViolation = 0.0;  // smallest total slack reached (0 if feasible)
  std::vector<SweepRecord> history;
  ResidualReport residual;  // final from-scratch check of the candidate
  std::string failure;      // empty when feasible
};

struct SynthesisResult {
  CandidateSolution best;
  int bestStart = -1;
  std::vector<StartReport> starts;
};

// Deterministic multistart seed: the invariant-set matrix starts from the
// stacked augmented constraint rows plus randomly perturbed copies of them
// (row-normalized), gains start near zero, rho at 0.5, and J as the
// least-squares left inverse of L. Multipliers are left empty; the first
// alternating step solves for them.
CandidateSolution initialGuess(const LpvProblem& problem, const SynthesisConfig& cfg,
                               std::uint64_t seed);

// Multi-start alternating linear programming on the bilinear design problem.
// Each sweep alternates two exact LPs: one over multipliers, gains, left
// inverse, direction scalings and the contraction factor (set matrix and rho
// frozen), one over the set matrix and rho (everything else frozen). Every
// condition is enforced in both blocks, so each block contains the incumbent
// and the objective never degrades. Starts that cannot reach feasibility run
// an elastic phase minimizing total constraint violation first.
SynthesisResult synthesize(const LpvProblem& problem, const SynthesisConfig& cfg);

}  // namespace polyrpi
