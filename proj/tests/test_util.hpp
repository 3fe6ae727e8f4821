#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

namespace testutil {

// Deterministic uniform doubles from raw 64-bit draws; std::uniform_real_distribution
// is implementation-defined and would break cross-platform frozen expectations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * unit(); }

  int uniformInt(int a, int b) {  // inclusive
    return a + static_cast<int>(gen_() % static_cast<std::uint64_t>(b - a + 1));
  }

  double gaussian() {
    double u1 = unit(), u2 = unit();
    while (u1 <= 1e-300) u1 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  Eigen::MatrixXd matrix(int r, int c, double lo, double hi) {
    Eigen::MatrixXd M(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) M(i, j) = uniform(lo, hi);
    return M;
  }

  Eigen::VectorXd vector(int n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }

  // Dirichlet(1,...,1): uniform over the probability simplex.
  Eigen::VectorXd simplexPoint(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) {
      double u = unit();
      while (u <= 1e-300) u = unit();
      v(i) = -std::log(u);
    }
    return v / v.sum();
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace testutil
