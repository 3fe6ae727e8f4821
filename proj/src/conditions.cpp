#include "polyrpi/conditions.hpp"

#include <algorithm>
#include <cmath>

#include "polyrpi/errors.hpp"
#include "polyrpi/matrix_polytope.hpp"

namespace polyrpi {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double maxAbs(const MatrixXd& M) { return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff(); }

double maxPos(const MatrixXd& M) {
  return M.size() == 0 ? 0.0 : std::max(0.0, M.maxCoeff());
}

double negPart(const MatrixXd& M) {
  return M.size() == 0 ? 0.0 : std::max(0.0, -M.minCoeff());
}

struct Shapes {
  int nv, lr, ld, lxi, lud, nxi, nd;
  bool hasRate;
};

Shapes checkShapes(const LpvProblem& p, const AugmentedSystem& aug, const ClosedLoopGrids& grids,
                   const CandidateSolution& c) {
  Shapes s;
  s.nv = p.nv();
  s.lr = static_cast<int>(c.L.rows());
  s.ld = aug.Dbig.numRows();
  s.lxi = aug.Xi.numRows();
  s.lud = p.lud();
  s.nxi = p.nxi();
  s.nd = p.ndist();
  s.hasRate = p.Udelta.has_value();

  if (c.L.cols() != s.nxi) throw InvalidDimension("candidate: L column count");
  if (c.rho.size() != s.lr) throw InvalidDimension("candidate: rho length");
  if (c.H.rows() != s.nv * s.lr || c.H.cols() != s.nv * s.lr)
    throw InvalidDimension("candidate: H shape");
  if (c.V.rows() != s.nv * s.lr || c.V.cols() != s.nv * s.ld)
    throw InvalidDimension("candidate: V shape");
  if (c.G.rows() != s.lxi || c.G.cols() != s.lr) throw InvalidDimension("candidate: G shape");
  if (s.hasRate) {
    if (c.Q.rows() != s.nv * s.lud || c.Q.cols() != s.nv * s.lr)
      throw InvalidDimension("candidate: Q shape");
    if (c.T.rows() != s.nv * s.lud || c.T.cols() != s.nv * s.ld)
      throw InvalidDimension("candidate: T shape");
  }
  if (c.J.rows() != s.nxi || c.J.cols() != s.lr) throw InvalidDimension("candidate: J shape");
  if (static_cast<int>(c.psis.size()) != c.gammas.size())
    throw InvalidDimension("candidate: direction count mismatch");
  for (const auto& psi : c.psis)
    if (psi.size() != s.nxi) throw InvalidDimension("candidate: direction length");
  if (grids.Acl.numVertices() != s.nv || grids.Acl.blockRows() != s.nxi ||
      grids.Bcl.blockCols() != s.nd)
    throw InvalidDimension("candidate: grid shape");
  return s;
}

double domainResidual(const CandidateSolution& c) {
  double v = 0.0;
  v = std::max(v, negPart(c.H));
  v = std::max(v, negPart(c.V));
  v = std::max(v, negPart(c.G));
  v = std::max(v, negPart(c.Q));
  v = std::max(v, negPart(c.T));
  if (c.rho.size() > 0) {
    v = std::max(v, std::max(0.0, -c.rho.minCoeff()));
    v = std::max(v, std::max(0.0, c.rho.maxCoeff() - 1.0));
  }
  if (c.gammas.size() > 0) v = std::max(v, std::max(0.0, -c.gammas.minCoeff()));
  return v;
}

// Conditions that do not involve vertex pairs: inclusion in the augmented
// constraint set, the left inverse, and the reach directions.
void pairFreeConditions(const AugmentedSystem& aug, const CandidateSolution& c,
                        ResidualReport& rep) {
  rep.stateInclusionEq = maxAbs(c.G * c.L - aug.Xi.P());
  rep.stateInclusionSum =
      maxPos(c.G.rowwise().sum() - VectorXd::Ones(c.G.rows()));
  rep.leftInverse = maxAbs(c.J * c.L - MatrixXd::Identity(c.L.cols(), c.L.cols()));
  double dir = 0.0;
  for (int t = 0; t < c.gammas.size(); ++t)
    dir = std::max(dir, maxPos(c.gammas(t) * (c.L * c.psis[t]) - VectorXd::Ones(c.L.rows())));
  rep.directions = dir;
  rep.domain = domainResidual(c);
}

}  // namespace

double ResidualReport::maxResidual() const {
  return std::max({stateUpdateEq, distUpdateEq, contraction, ultimateBound, stateInclusionEq,
                   stateInclusionSum, rateStateEq, rateDistEq, rateSum, leftInverse, directions,
                   domain});
}

bool ResidualReport::feasible(double tol) const { return maxResidual() <= tol; }

ResidualReport residuals(const LpvProblem& problem, const AugmentedSystem& aug,
                         const ClosedLoopGrids& grids, const CandidateSolution& c) {
  const Shapes s = checkShapes(problem, aug, grids, c);
  ResidualReport rep;
  pairFreeConditions(aug, c, rep);

  const MatrixXd liftL = diagLift(c.L, s.nv);
  const MatrixXd liftD = diagLift(aug.Dbig.P(), s.nv);
  const MatrixXd liftOneR = diagLift(MatrixXd::Ones(s.lr, 1), s.nv);
  const MatrixXd liftOneD = diagLift(MatrixXd::Ones(s.ld, 1), s.nv);
  const MatrixXd liftRho = diagLift(c.rho, s.nv);

  const MatrixXd eqState = c.H * liftL - liftL * grids.Acl.flatten();
  const MatrixXd eqDist = c.V * liftD - liftL * grids.Bcl.flatten();
  const MatrixXd ineqContr =
      c.H * liftOneR + c.V * liftOneD - c.lambda * MatrixXd::Ones(s.nv * s.lr, s.nv);
  const MatrixXd ineqUb = c.H * liftRho + c.V * liftOneD - c.eps1 * c.rho.replicate(s.nv, s.nv);

  rep.stateUpdateEq = maxAbs(eqState);
  rep.distUpdateEq = maxAbs(eqDist);
  rep.contraction = maxPos(ineqContr);
  rep.ultimateBound = maxPos(ineqUb);

  MatrixXd eqRateState, eqRateDist, ineqRate;
  if (s.hasRate) {
    const MatrixXd liftUd = diagLift(problem.Udelta->P(), s.nv);
    eqRateState = c.Q * liftL - liftUd * grids.Adu.flatten();
    eqRateDist = c.T * liftD - liftUd * grids.Bdu.flatten();
    ineqRate = c.Q * liftOneR + c.T * liftOneD - MatrixXd::Ones(s.nv * s.lud, s.nv);
    rep.rateStateEq = maxAbs(eqRateState);
    rep.rateDistEq = maxAbs(eqRateDist);
    rep.rateSum = maxPos(ineqRate);
  }

  // Attribute the worst residual to a vertex pair by scanning the stacked
  // residual matrices blockwise.
  double worst = -1.0;
  for (int r = 0; r < s.nv; ++r) {
    for (int cc = 0; cc < s.nv; ++cc) {
      double v = maxAbs(eqState.block(r * s.lr, cc * s.nxi, s.lr, s.nxi));
      v = std::max(v, maxAbs(eqDist.block(r * s.lr, cc * s.nd, s.lr, s.nd)));
      v = std::max(v, maxPos(ineqContr.block(r * s.lr, cc, s.lr, 1)));
      v = std::max(v, maxPos(ineqUb.block(r * s.lr, cc, s.lr, 1)));
      if (s.hasRate) {
        v = std::max(v, maxAbs(eqRateState.block(r * s.lud, cc * s.nxi, s.lud, s.nxi)));
        v = std::max(v, maxAbs(eqRateDist.block(r * s.lud, cc * s.nd, s.lud, s.nd)));
        v = std::max(v, maxPos(ineqRate.block(r * s.lud, cc, s.lud, 1)));
      }
      if (v > worst) {
        worst = v;
        rep.worstPair = r * s.nv + cc;
      }
    }
  }
  return rep;
}

ResidualReport residualsVertexPairForm(const LpvProblem& problem, const AugmentedSystem& aug,
                                       const ClosedLoopGrids& grids,
                                       const CandidateSolution& c) {
  const Shapes s = checkShapes(problem, aug, grids, c);
  ResidualReport rep;
  pairFreeConditions(aug, c, rep);

  const VectorXd oneR = VectorXd::Ones(s.lr);
  const VectorXd oneD = VectorXd::Ones(s.ld);
  const MatrixXd& D = aug.Dbig.P();

  double worst = -1.0;
  for (int r = 0; r < s.nv; ++r) {
    for (int cc = 0; cc < s.nv; ++cc) {
      const MatrixXd Hrc = c.H.block(r * s.lr, cc * s.lr, s.lr, s.lr);
      const MatrixXd Vrc = c.V.block(r * s.lr, cc * s.ld, s.lr, s.ld);

      const double eqState = maxAbs(Hrc * c.L - c.L * grids.Acl.block(r, cc));
      const double eqDist = maxAbs(Vrc * D - c.L * grids.Bcl.block(r, cc));
      const double contr = maxPos(Hrc * oneR + Vrc * oneD - c.lambda * oneR);
      const double ub = maxPos(Hrc * c.rho + Vrc * oneD - c.eps1 * c.rho);

      rep.stateUpdateEq = std::max(rep.stateUpdateEq, eqState);
      rep.distUpdateEq = std::max(rep.distUpdateEq, eqDist);
      rep.contraction = std::max(rep.contraction, contr);
      rep.ultimateBound = std::max(rep.ultimateBound, ub);
      double v = std::max({eqState, eqDist, contr, ub});

      if (s.hasRate) {
        const MatrixXd Qrc = c.Q.block(r * s.lud, cc * s.lr, s.lud, s.lr);
        const MatrixXd Trc = c.T.block(r * s.lud, cc * s.ld, s.lud, s.ld);
        const MatrixXd& Ud = problem.Udelta->P();
        const double rs = maxAbs(Qrc * c.L - Ud * grids.Adu.block(r, cc));
        const double rd = maxAbs(Trc * D - Ud * grids.Bdu.block(r, cc));
        const double rsum = maxPos(Qrc * oneR + Trc * oneD - VectorXd::Ones(s.lud));
        rep.rateStateEq = std::max(rep.rateStateEq, rs);
        rep.rateDistEq = std::max(rep.rateDistEq, rd);
        rep.rateSum = std::max(rep.rateSum, rsum);
        v = std::max({v, rs, rd, rsum});
      }
      if (v > worst) {
        worst = v;
        rep.worstPair = r * s.nv + cc;
      }
    }
  }
  return rep;
}

}  // namespace polyrpi
