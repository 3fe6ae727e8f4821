#include "polyrpi/closed_loop.hpp"

#include "polyrpi/errors.hpp"

namespace polyrpi {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd interpolate(const std::vector<MatrixXd>& mats, const Simplex& a) {
  if (a.size() != static_cast<int>(mats.size()))
    throw InvalidDimension("gain schedule: weight count mismatch");
  MatrixXd out = MatrixXd::Zero(mats[0].rows(), mats[0].cols());
  for (size_t i = 0; i < mats.size(); ++i) out += a[static_cast<int>(i)] * mats[i];
  return out;
}

void checkGainShapes(const GainSchedule& g, int nv, int nu, int ny) {
  if (g.numVertices() != nv || static_cast<int>(g.Kbar.size()) != nv ||
      static_cast<int>(g.Khat.size()) != nv)
    throw InvalidDimension("gain schedule: vertex count mismatch");
  for (int i = 0; i < nv; ++i) {
    if (g.K[i].rows() != nu || g.K[i].cols() != ny || g.Kbar[i].rows() != nu ||
        g.Kbar[i].cols() != nu || g.Khat[i].rows() != nu || g.Khat[i].cols() != ny)
      throw InvalidDimension("gain schedule: gain shape mismatch");
  }
}

}  // namespace

MatrixXd GainSchedule::Kat(const Simplex& a) const { return interpolate(K, a); }
MatrixXd GainSchedule::KbarAt(const Simplex& a) const { return interpolate(Kbar, a); }
MatrixXd GainSchedule::KhatAt(const Simplex& a) const { return interpolate(Khat, a); }

GainSchedule zeroGains(int nv, int nu, int ny) {
  GainSchedule g;
  g.K.assign(nv, MatrixXd::Zero(nu, ny));
  g.Kbar.assign(nv, MatrixXd::Zero(nu, nu));
  g.Khat.assign(nv, MatrixXd::Zero(nu, ny));
  return g;
}

ClosedLoopGrids buildGrids(const AugmentedSystem& aug, const GainSchedule& gains) {
  const int nxi = aug.Aaug.rows();
  const int nu = static_cast<int>(aug.Baug.cols());
  const int nx = nxi - nu;
  const int ny = static_cast<int>((aug.Caug.rows() - nu)) / 2;
  const int neta = static_cast<int>(aug.Detaaug.cols());
  const int np = aug.Bpaug.cols();
  const int nd = np + 2 * neta;
  const int nv = aug.Aaug.numVertices();

  const MatrixXd C = aug.Caug.topLeftCorner(ny, nx);
  const MatrixXd Deta = aug.Detaaug.topRows(ny);
  checkGainShapes(gains, nv, nu, ny);

  // Factor the loop as F(alpha) + M(alphaPlus) N(alpha) per grid, with
  // M = [0; Khat] (state grids) or Khat itself (increment grids).
  std::vector<MatrixXd> f1, n1, f2, n2, g1, g2, m1;
  for (int c = 0; c < nv; ++c) {
    const MatrixXd Ac = aug.Aaug.vertex(c).topLeftCorner(nx, nx);
    const MatrixXd Bc = aug.Aaug.vertex(c).topRightCorner(nx, nu);
    const MatrixXd Bpc = aug.Bpaug.vertex(c).topRows(nx);
    const MatrixXd& Kc = gains.K[c];
    const MatrixXd& Kbarc = gains.Kbar[c];

    MatrixXd F1(nxi, nxi);
    F1 << Ac, Bc, Kc * C, MatrixXd::Identity(nu, nu) + Kbarc;
    f1.push_back(std::move(F1));

    MatrixXd N1(ny, nxi);
    N1 << C * Ac, C * Bc;
    n1.push_back(std::move(N1));

    MatrixXd F2 = MatrixXd::Zero(nxi, nd);
    F2.topLeftCorner(nx, np) = Bpc;
    F2.block(nx, np, nu, neta) = Kc * Deta;
    f2.push_back(std::move(F2));

    MatrixXd N2 = MatrixXd::Zero(ny, nd);
    N2.leftCols(np) = C * Bpc;
    N2.rightCols(neta) = Deta;
    n2.push_back(std::move(N2));

    MatrixXd G1(nu, nxi);
    G1 << Kc * C, Kbarc;
    g1.push_back(std::move(G1));

    MatrixXd G2 = MatrixXd::Zero(nu, nd);
    G2.block(0, np, nu, neta) = Kc * Deta;
    g2.push_back(std::move(G2));
  }
  for (int r = 0; r < nv; ++r) {
    MatrixXd M1 = MatrixXd::Zero(nxi, ny);
    M1.bottomRows(nu) = gains.Khat[r];
    m1.push_back(std::move(M1));
  }

  const MatrixPolytope F1(f1), N1(n1), F2(f2), N2(n2), G1(g1), G2(g2), M1(m1),
      MhatP(gains.Khat);
  return ClosedLoopGrids{composedSum(F1, M1, N1), composedSum(F2, M1, N2),
                         composedSum(G1, MhatP, N1), composedSum(G2, MhatP, N2)};
}

StepResult stepClosedLoop(const ClosedLoopGrids& grids, const VectorXd& xi, const VectorXd& d,
                          const Simplex& alpha, const Simplex& alphaPlus) {
  if (xi.size() != grids.Acl.blockCols() || d.size() != grids.Bcl.blockCols())
    throw InvalidDimension("closed-loop step: state or disturbance size mismatch");
  StepResult out;
  out.xiNext = grids.Acl.evaluate(alphaPlus, alpha) * xi + grids.Bcl.evaluate(alphaPlus, alpha) * d;
  out.deltaU = grids.Adu.evaluate(alphaPlus, alpha) * xi + grids.Bdu.evaluate(alphaPlus, alpha) * d;
  return out;
}

VectorXd controlLawStep(const GainSchedule& gains, const VectorXd& uPrev, const VectorXd& yPrev,
                        const VectorXd& yNow, const Simplex& alphaPrev, const Simplex& alphaNow) {
  const MatrixXd K = gains.Kat(alphaPrev);
  const MatrixXd Kbar = gains.KbarAt(alphaPrev);
  const MatrixXd Khat = gains.KhatAt(alphaNow);
  if (uPrev.size() != Kbar.cols() || yPrev.size() != K.cols() || yNow.size() != Khat.cols())
    throw InvalidDimension("control law: input size mismatch");
  return (MatrixXd::Identity(Kbar.rows(), Kbar.cols()) + Kbar) * uPrev + K * yPrev + Khat * yNow;
}

}  // namespace polyrpi
