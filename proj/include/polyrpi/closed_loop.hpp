#pragma once

#include <Eigen/Dense>

#include <vector>

#include "polyrpi/matrix_polytope.hpp"
#include "polyrpi/plant.hpp"

namespace polyrpi {

// Parameter-varying incremental output feedback
//   du = K(a) y + Kbar(a) u + Khat(a+) y+,
// stored by vertex: K, Kbar interpolate at the current parameter, Khat at
// the successor parameter.
struct GainSchedule {
  std::vector<Eigen::MatrixXd> K;     // nu x ny each
  std::vector<Eigen::MatrixXd> Kbar;  // nu x nu each
  std::vector<Eigen::MatrixXd> Khat;  // nu x ny each

  int numVertices() const { return static_cast<int>(K.size()); }
  Eigen::MatrixXd Kat(const Simplex& a) const;
  Eigen::MatrixXd KbarAt(const Simplex& a) const;
  Eigen::MatrixXd KhatAt(const Simplex& a) const;
};

GainSchedule zeroGains(int nv, int nu, int ny);

// Vertex-pair grids of the closed-loop and increment dynamics. Row index
// selects the successor-parameter (Khat) vertex, column index the
// current-parameter (plant and K, Kbar) vertex, so that
//   xi+ = evaluate(alphaPlus, alpha) applied to (xi, d+).
struct ClosedLoopGrids {
  BlockGrid Acl;  // blocks nxi x nxi
  BlockGrid Bcl;  // blocks nxi x nd
  BlockGrid Adu;  // blocks nu x nxi
  BlockGrid Bdu;  // blocks nu x nd
};

ClosedLoopGrids buildGrids(const AugmentedSystem& aug, const GainSchedule& gains);

struct StepResult {
  Eigen::VectorXd xiNext;
  Eigen::VectorXd deltaU;
};

// One closed-loop transition of the augmented state xi = (x, u) under
// disturbance d = (p, eta, eta+), with parameters (alpha, alphaPlus).
StepResult stepClosedLoop(const ClosedLoopGrids& grids, const Eigen::VectorXd& xi,
                          const Eigen::VectorXd& d, const Simplex& alpha,
                          const Simplex& alphaPlus);

// The deployable output-feedback form of the same law:
//   u = (I + Kbar(aPrev)) uPrev + K(aPrev) yPrev + Khat(aNow) yNow.
Eigen::VectorXd controlLawStep(const GainSchedule& gains, const Eigen::VectorXd& uPrev,
                               const Eigen::VectorXd& yPrev, const Eigen::VectorXd& yNow,
                               const Simplex& alphaPrev, const Simplex& alphaNow);

}  // namespace polyrpi
