#pragma once

#include <Eigen/Dense>

#include <vector>

namespace polyrpi {

// Convex-combination weights: componentwise nonnegative, summing to one.
class Simplex {
 public:
  explicit Simplex(Eigen::VectorXd w);
  static Simplex vertex(int size, int index);

  const Eigen::VectorXd& weights() const { return w_; }
  double operator[](int i) const { return w_(i); }
  int size() const { return static_cast<int>(w_.size()); }

 private:
  Eigen::VectorXd w_;
};

// A matrix-valued polytope given by its vertex matrices; points are convex
// combinations M(w) = sum_i w_i M_i.
class MatrixPolytope {
 public:
  explicit MatrixPolytope(std::vector<Eigen::MatrixXd> vertices);
  static MatrixPolytope constant(const Eigen::MatrixXd& M, int numVertices);

  int numVertices() const { return static_cast<int>(v_.size()); }
  int rows() const { return static_cast<int>(v_[0].rows()); }
  int cols() const { return static_cast<int>(v_[0].cols()); }
  const Eigen::MatrixXd& vertex(int i) const { return v_.at(i); }

  Eigen::MatrixXd evaluate(const Simplex& w) const;
  // [M_1 ... M_nv], rows x (nv*cols); pairs with gammaStack(w, cols).
  Eigen::MatrixXd rowStack() const;
  // [M_1; ...; M_nv], (nv*rows) x cols; pairs with gammaStackT(w, rows).
  Eigen::MatrixXd colStack() const;

 private:
  std::vector<Eigen::MatrixXd> v_;
};

// Selector [w_1 I; ...; w_nv I] of block size `block`: (nv*block) x block.
Eigen::MatrixXd gammaStack(const Simplex& w, int block);
// Selector [w_1 I ... w_nv I]: block x (nv*block).
Eigen::MatrixXd gammaStackT(const Simplex& w, int block);

// Two-parameter grid of blocks: entry (i, j) couples vertex i of the first
// parameter with vertex j of the second.
class BlockGrid {
 public:
  BlockGrid(int numVertices, int blockRows, int blockCols);

  int numVertices() const { return nv_; }
  int blockRows() const { return br_; }
  int blockCols() const { return bc_; }

  Eigen::MatrixXd& block(int i, int j) { return g_[idx(i, j)]; }
  const Eigen::MatrixXd& block(int i, int j) const { return g_[idx(i, j)]; }

  // Big matrix with block (i, j) at block-row i, block-col j.
  Eigen::MatrixXd flatten() const;
  // sum_{i,j} beta_i theta_j blocks[i][j]; equals
  // gammaStackT(beta, blockRows) * flatten() * gammaStack(theta, blockCols).
  Eigen::MatrixXd evaluate(const Simplex& beta, const Simplex& theta) const;

 private:
  int idx(int i, int j) const;
  int nv_, br_, bc_;
  std::vector<Eigen::MatrixXd> g_;
};

// blocks[i][j] = M_i * N_j, so M(beta) N(theta) = evaluate(beta, theta).
BlockGrid composedProduct(const MatrixPolytope& M, const MatrixPolytope& N);
// blocks[i][j] = F_j + M_i * N_j, so F(theta) + M(beta) N(theta) = evaluate(beta, theta).
BlockGrid composedSum(const MatrixPolytope& F, const MatrixPolytope& M, const MatrixPolytope& N);
// I_{nv} (x) M; satisfies diagLift(M, nv) * gammaStack(w, M.cols()) ==
// gammaStack(w, M.rows()) * M.
Eigen::MatrixXd diagLift(const Eigen::MatrixXd& M, int numVertices);

}  // namespace polyrpi
