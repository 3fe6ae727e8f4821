#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "polyrpi/lp.hpp"

namespace polyrpi {

// Polyhedron {x : P x <= phi} with phi > 0 componentwise, so the origin is
// always in the interior. Rows with (numerically) zero normals are rejected.
class HPolyhedron {
 public:
  HPolyhedron(Eigen::MatrixXd P, Eigen::VectorXd phi);
  // Axis-aligned box; requires lo < 0 < hi per coordinate.
  static HPolyhedron box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);
  static HPolyhedron unitBox(int dim);

  int ambientDim() const { return static_cast<int>(P_.cols()); }
  int numRows() const { return static_cast<int>(P_.rows()); }
  const Eigen::MatrixXd& P() const { return P_; }
  const Eigen::VectorXd& phi() const { return phi_; }

  bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const;
  // Rows scaled so the bound vector is all ones.
  HPolyhedron normalized() const;

 private:
  Eigen::MatrixXd P_;
  Eigen::VectorXd phi_;
};

struct ContainmentResult {
  bool contained = false;
  Eigen::MatrixXd Q;        // nonnegative, Q P_inner ~= P_outer (row-recovered)
  double eqResidual = 0.0;  // max |Q P1 - P2|
  double ineqResidual = 0.0;  // max positive part of Q phi1 - phi2
  int violatedRow = -1;     // outer row witnessing non-containment
};

// Inclusion test with multipliers: inner is contained in outer iff there is a
// nonnegative Q with Q P1 = P2 and Q phi1 <= phi2; recovered row by row via
// LPs min q'phi1 s.t. q'P1 = P2_row, q >= 0. An infeasible row LP means the
// inner set is unbounded in that direction; a value above phi2_row means a
// separating point exists. Both report the violated row.
ContainmentResult checkContainment(const HPolyhedron& inner, const HPolyhedron& outer,
                                   double tol = 1e-9);

// max over the set of dir'x; +inf when unbounded in that direction.
double supportValue(const HPolyhedron& set, const Eigen::VectorXd& dir);

// Recession-direction probe along every +-axis.
bool isBounded(const HPolyhedron& set);

// All vertices of a bounded polyhedron, ambient dimension <= 4, deduplicated
// and sorted lexicographically. Throws UnboundedSet / UnsupportedDimension.
std::vector<Eigen::VectorXd> enumerateVertices(const HPolyhedron& set, double tol = 1e-9);

struct VolumeResult {
  double value = 0.0;
  double stderror = 0.0;  // 0 for exact results
  long long samples = 0;  // 0 for exact results
};

// Exact via vertex/facet decomposition up to dimension 3; dimension 4 uses
// Monte Carlo over the vertex bounding box with at least `minSamples` draws.
VolumeResult volume(const HPolyhedron& set, std::uint64_t seed = 0,
                    long long minSamples = 1000000);

// Orthogonal projection onto keepDims (result columns follow keepDims order)
// by Fourier-Motzkin elimination, pruning redundant rows after each step.
HPolyhedron project(const HPolyhedron& set, const std::vector<int>& keepDims);

// Drops rows whose omission changes the support value by at most 1e-9.
HPolyhedron removeRedundancy(const HPolyhedron& set);

}  // namespace polyrpi
