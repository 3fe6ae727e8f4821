#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

namespace polyrpi {

// Deterministic RNG: raw mt19937_64 draws mapped to doubles by hand, because
// std::uniform_real_distribution is implementation-defined and would break
// byte-identical reruns across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * unit(); }

  int uniformInt(int a, int b) {  // inclusive, small ranges only
    return a + static_cast<int>(gen_() % static_cast<std::uint64_t>(b - a + 1));
  }

  double gaussian() {
    double u1 = unit();
    while (u1 <= 1e-300) u1 = unit();
    const double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  Eigen::VectorXd gaussianVector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = gaussian();
    return v;
  }

  // Uniform over the probability simplex.
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

}  // namespace polyrpi
