#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <vector>

namespace polyrpi::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Status { Optimal, Infeasible, Unbounded, NumericalFailure };

// maximize c'x  subject to  row_lo <= A x <= row_hi,  var_lo <= x <= var_hi.
// Equality rows are expressed as row_lo == row_hi; one-sided rows use +-inf.
struct Problem {
  Eigen::VectorXd c;
  Eigen::MatrixXd A;
  Eigen::VectorXd row_lo, row_hi;
  Eigen::VectorXd var_lo, var_hi;

  int numVars() const { return static_cast<int>(A.cols()); }
  int numRows() const { return static_cast<int>(A.rows()); }
};

// Variable/logical states for warm starting. Index space: 0..n-1 structural,
// n..n+m-1 logicals (one per row, value = row activity).
enum class VarState : std::int8_t { Basic = 0, AtLower = 1, AtUpper = 2, FreeZero = 3 };

struct Basis {
  std::vector<std::int32_t> basic;   // m variable indices
  std::vector<VarState> state;       // n+m states, consistent with `basic`
  bool empty() const { return basic.empty() && state.empty(); }
};

struct Solution {
  Status status = Status::NumericalFailure;
  Eigen::VectorXd x;            // structural values
  double objective = 0.0;       // c'x
  Eigen::VectorXd y;            // row duals: c = A'y + z on optimal solutions
  Eigen::VectorXd z;            // variable reduced costs
  int pivots = 0;
  int phase1_pivots = 0;
  double primal_residual = 0.0;  // max bound/row violation at return
  double dual_residual = 0.0;    // max complementary-slackness defect
  Basis basis;                   // final basis, reusable as warm start
};

// Dense bounded-variable revised primal simplex with ranged rows.
// Logical (row-activity) variables double as the crash basis, a composite
// phase 1 drives bound violations of basics to zero, and the factorization
// is a dense LU refreshed every `refactor_every` pivots with product-form
// updates in between. Dantzig pricing, with Bland's rule taking over after
// a degeneracy streak to guarantee termination.
class Solver {
 public:
  struct Options {
    int max_pivots = 50000;
    int refactor_every = 50;
    double tol_feas = 1e-9;    // bound violation tolerance
    double tol_cost = 1e-9;    // reduced-cost optimality tolerance
    double tol_pivot = 1e-9;   // smallest acceptable pivot magnitude
    int bland_after = 200;     // consecutive degenerate pivots before Bland
  };

  Solver() = default;
  explicit Solver(Options opt) : opt_(opt) {}

  Solution solve(const Problem& p, const Basis* warm = nullptr) const;

  const Options& options() const { return opt_; }

 private:
  Options opt_;
};

// Incremental construction helper: variables are allocated in blocks and rows
// are sparse coefficient lists; build() densifies once.
class Builder {
 public:
  int addVar(double lo, double hi, double obj = 0.0);
  int addVars(int count, double lo, double hi);  // returns first index
  void setObjective(int var, double coeff);
  void addObjective(int var, double coeff);
  // Terms may repeat a variable; coefficients accumulate.
  void addRow(const std::vector<std::pair<int, double>>& terms, double lo, double hi);
  int numVars() const { return static_cast<int>(lo_.size()); }
  int numRows() const { return static_cast<int>(row_lo_.size()); }
  Problem build() const;

 private:
  std::vector<double> lo_, hi_, obj_;
  std::vector<std::vector<std::pair<int, double>>> rows_;
  std::vector<double> row_lo_, row_hi_;
};

}  // namespace polyrpi::lp
