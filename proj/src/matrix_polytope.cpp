#include "polyrpi/matrix_polytope.hpp"

#include <cmath>

#include "polyrpi/errors.hpp"

namespace polyrpi {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Simplex::Simplex(VectorXd w) : w_(std::move(w)) {
  if (w_.size() == 0) throw InvalidConfig("simplex: empty weight vector");
  for (int i = 0; i < w_.size(); ++i) {
    if (!std::isfinite(w_(i)) || w_(i) < -1e-12)
      throw InvalidConfig("simplex: weights must be nonnegative");
    if (w_(i) < 0.0) w_(i) = 0.0;
  }
  const double s = w_.sum();
  if (std::abs(s - 1.0) > 1e-9) throw InvalidConfig("simplex: weights must sum to 1");
  w_ /= s;
}

Simplex Simplex::vertex(int size, int index) {
  if (index < 0 || index >= size) throw InvalidConfig("simplex: vertex index out of range");
  return Simplex(VectorXd::Unit(size, index));
}

MatrixPolytope::MatrixPolytope(std::vector<MatrixXd> vertices) : v_(std::move(vertices)) {
  if (v_.empty()) throw InvalidDimension("matrix polytope: needs at least one vertex");
  for (const auto& M : v_) {
    if (M.rows() != v_[0].rows() || M.cols() != v_[0].cols())
      throw InvalidDimension("matrix polytope: vertex shapes differ");
    if (!M.allFinite()) throw InvalidDimension("matrix polytope: non-finite vertex entries");
  }
}

MatrixPolytope MatrixPolytope::constant(const MatrixXd& M, int numVertices) {
  if (numVertices < 1) throw InvalidDimension("matrix polytope: vertex count must be positive");
  return MatrixPolytope(std::vector<MatrixXd>(numVertices, M));
}

MatrixXd MatrixPolytope::evaluate(const Simplex& w) const {
  if (w.size() != numVertices())
    throw InvalidDimension("matrix polytope: weight count mismatch");
  MatrixXd out = MatrixXd::Zero(rows(), cols());
  for (int i = 0; i < numVertices(); ++i) out += w[i] * v_[i];
  return out;
}

MatrixXd MatrixPolytope::rowStack() const {
  MatrixXd out(rows(), static_cast<Eigen::Index>(numVertices()) * cols());
  for (int i = 0; i < numVertices(); ++i) out.middleCols(i * cols(), cols()) = v_[i];
  return out;
}

MatrixXd MatrixPolytope::colStack() const {
  MatrixXd out(static_cast<Eigen::Index>(numVertices()) * rows(), cols());
  for (int i = 0; i < numVertices(); ++i) out.middleRows(i * rows(), rows()) = v_[i];
  return out;
}

MatrixXd gammaStack(const Simplex& w, int block) {
  MatrixXd out = MatrixXd::Zero(static_cast<Eigen::Index>(w.size()) * block, block);
  for (int i = 0; i < w.size(); ++i)
    out.middleRows(i * block, block) = w[i] * MatrixXd::Identity(block, block);
  return out;
}

MatrixXd gammaStackT(const Simplex& w, int block) {
  MatrixXd out = MatrixXd::Zero(block, static_cast<Eigen::Index>(w.size()) * block);
  for (int i = 0; i < w.size(); ++i)
    out.middleCols(i * block, block) = w[i] * MatrixXd::Identity(block, block);
  return out;
}

BlockGrid::BlockGrid(int numVertices, int blockRows, int blockCols)
    : nv_(numVertices), br_(blockRows), bc_(blockCols) {
  if (nv_ < 1 || br_ < 0 || bc_ < 0) throw InvalidDimension("block grid: bad shape");
  g_.assign(static_cast<std::size_t>(nv_) * nv_, MatrixXd::Zero(br_, bc_));
}

int BlockGrid::idx(int i, int j) const {
  if (i < 0 || i >= nv_ || j < 0 || j >= nv_)
    throw InvalidDimension("block grid: index out of range");
  return i * nv_ + j;
}

MatrixXd BlockGrid::flatten() const {
  MatrixXd out(static_cast<Eigen::Index>(nv_) * br_, static_cast<Eigen::Index>(nv_) * bc_);
  for (int i = 0; i < nv_; ++i)
    for (int j = 0; j < nv_; ++j) out.block(i * br_, j * bc_, br_, bc_) = g_[i * nv_ + j];
  return out;
}

MatrixXd BlockGrid::evaluate(const Simplex& beta, const Simplex& theta) const {
  if (beta.size() != nv_ || theta.size() != nv_)
    throw InvalidDimension("block grid: weight count mismatch");
  MatrixXd out = MatrixXd::Zero(br_, bc_);
  for (int i = 0; i < nv_; ++i)
    for (int j = 0; j < nv_; ++j) out += beta[i] * theta[j] * g_[i * nv_ + j];
  return out;
}

BlockGrid composedProduct(const MatrixPolytope& M, const MatrixPolytope& N) {
  if (M.cols() != N.rows()) throw InvalidDimension("composed product: inner dims differ");
  if (M.numVertices() != N.numVertices())
    throw InvalidDimension("composed product: vertex counts differ");
  BlockGrid g(M.numVertices(), M.rows(), N.cols());
  for (int i = 0; i < M.numVertices(); ++i)
    for (int j = 0; j < N.numVertices(); ++j) g.block(i, j) = M.vertex(i) * N.vertex(j);
  return g;
}

BlockGrid composedSum(const MatrixPolytope& F, const MatrixPolytope& M,
                      const MatrixPolytope& N) {
  if (M.cols() != N.rows()) throw InvalidDimension("composed sum: inner dims differ");
  if (F.rows() != M.rows() || F.cols() != N.cols())
    throw InvalidDimension("composed sum: affine part shape differs");
  if (F.numVertices() != M.numVertices() || M.numVertices() != N.numVertices())
    throw InvalidDimension("composed sum: vertex counts differ");
  BlockGrid g(M.numVertices(), M.rows(), N.cols());
  for (int i = 0; i < M.numVertices(); ++i)
    for (int j = 0; j < N.numVertices(); ++j)
      g.block(i, j) = F.vertex(j) + M.vertex(i) * N.vertex(j);
  return g;
}

MatrixXd diagLift(const MatrixXd& M, int numVertices) {
  if (numVertices < 1) throw InvalidDimension("diag lift: vertex count must be positive");
  MatrixXd out = MatrixXd::Zero(static_cast<Eigen::Index>(numVertices) * M.rows(),
                                static_cast<Eigen::Index>(numVertices) * M.cols());
  for (int i = 0; i < numVertices; ++i)
    out.block(i * M.rows(), i * M.cols(), M.rows(), M.cols()) = M;
  return out;
}

}  // namespace polyrpi
