#include "polyrpi/lp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "polyrpi/errors.hpp"

namespace polyrpi::lp {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

bool finiteLo(double v) { return v > -kInf; }
bool finiteHi(double v) { return v < kInf; }

// Dense LU of the basis with product-form eta updates between refactorizations.
class Factor {
 public:
  void refactor(const MatrixXd& A, const std::vector<std::int32_t>& basic) {
    const int m = static_cast<int>(basic.size());
    const int n = static_cast<int>(A.cols());
    MatrixXd B(m, m);
    for (int p = 0; p < m; ++p) {
      const int j = basic[p];
      if (j < n) {
        B.col(p) = A.col(j);
      } else {
        B.col(p) = VectorXd::Zero(m);
        B(j - n, p) = -1.0;
      }
    }
    lu_.compute(B);
    etas_.clear();
    singular_ = false;
    if (m > 0) {
      const double mx = B.cwiseAbs().maxCoeff();
      const VectorXd diag = lu_.matrixLU().diagonal().cwiseAbs();
      if (diag.minCoeff() <= 1e-13 * std::max(1.0, mx)) singular_ = true;
    }
  }

  bool singular() const { return singular_; }
  int etaCount() const { return static_cast<int>(etas_.size()); }

  VectorXd ftran(VectorXd b) const {
    if (b.size() == 0) return b;
    VectorXd z = lu_.solve(b);
    for (const auto& e : etas_) {
      const double t = z(e.pos) / e.w(e.pos);
      z -= t * e.w;
      z(e.pos) = t;
    }
    return z;
  }

  VectorXd btran(VectorXd c) const {
    if (c.size() == 0) return c;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      const double dot = it->w.dot(c) - it->w(it->pos) * c(it->pos);
      c(it->pos) = (c(it->pos) - dot) / it->w(it->pos);
    }
    return lu_.transpose().solve(c);
  }

  // w must be ftran(entering column) computed against the current factor.
  void update(int pos, VectorXd w) { etas_.push_back({pos, std::move(w)}); }

 private:
  struct Eta {
    int pos;
    VectorXd w;
  };
  Eigen::PartialPivLU<MatrixXd> lu_;
  std::vector<Eta> etas_;
  bool singular_ = false;
};

struct Event {
  double t;
  int pos;        // basic position; -1 = entering bound flip
  double dslope;  // slope increase when passed (phase-1 long step)
  VarState rest;  // state the leaving variable rests at
  double absPiv;
};

class SimplexImpl {
 public:
  SimplexImpl(const Problem& p, const Solver::Options& opt) : p_(p), opt_(opt) {
    m_ = p.numRows();
    n_ = p.numVars();
    N_ = n_ + m_;
    lo_.resize(N_);
    hi_.resize(N_);
    lo_.head(n_) = p.var_lo;
    hi_.head(n_) = p.var_hi;
    lo_.tail(m_) = p.row_lo;
    hi_.tail(m_) = p.row_hi;
    cost_ = VectorXd::Zero(N_);
    cost_.head(n_) = -p.c;  // internal convention: minimize
    vals_ = VectorXd::Zero(N_);
  }

  Solution run(const Basis* warm);

 private:
  VectorXd column(int j) const {
    if (j < n_) return p_.A.col(j);
    VectorXd e = VectorXd::Zero(m_);
    e(j - n_) = -1.0;
    return e;
  }

  void crashBasis() {
    basic_.resize(m_);
    state_.assign(N_, VarState::AtLower);
    for (int i = 0; i < m_; ++i) {
      basic_[i] = n_ + i;
      state_[n_ + i] = VarState::Basic;
    }
    for (int j = 0; j < n_; ++j) state_[j] = defaultState(j);
  }

  VarState defaultState(int j) const {
    const bool fl = finiteLo(lo_(j)), fh = finiteHi(hi_(j));
    if (fl && fh) return std::abs(lo_(j)) <= std::abs(hi_(j)) ? VarState::AtLower : VarState::AtUpper;
    if (fl) return VarState::AtLower;
    if (fh) return VarState::AtUpper;
    return VarState::FreeZero;
  }

  bool adoptWarm(const Basis& warm) {
    if (static_cast<int>(warm.basic.size()) != m_) return false;
    if (static_cast<int>(warm.state.size()) != N_) return false;
    std::vector<char> seen(N_, 0);
    for (int j : warm.basic) {
      if (j < 0 || j >= N_ || seen[j]) return false;
      seen[j] = 1;
    }
    int nb = 0;
    for (int j = 0; j < N_; ++j) {
      const VarState s = warm.state[j];
      if (s == VarState::Basic) {
        if (!seen[j]) return false;
        ++nb;
      } else {
        if (seen[j]) return false;
        if (s == VarState::AtLower && !finiteLo(lo_(j))) return false;
        if (s == VarState::AtUpper && !finiteHi(hi_(j))) return false;
      }
    }
    if (nb != m_) return false;
    basic_.assign(warm.basic.begin(), warm.basic.end());
    state_ = warm.state;
    factor_.refactor(p_.A, basic_);
    if (factor_.singular()) return false;
    return true;
  }

  void setNonbasicValues() {
    for (int j = 0; j < N_; ++j) {
      switch (state_[j]) {
        case VarState::AtLower: vals_(j) = lo_(j); break;
        case VarState::AtUpper: vals_(j) = hi_(j); break;
        case VarState::FreeZero: vals_(j) = 0.0; break;
        case VarState::Basic: break;
      }
    }
  }

  void recomputeBasics() {
    VectorXd rhs = VectorXd::Zero(m_);
    for (int j = 0; j < n_; ++j) {
      if (state_[j] != VarState::Basic && vals_(j) != 0.0) rhs -= p_.A.col(j) * vals_(j);
    }
    for (int i = 0; i < m_; ++i) {
      const int j = n_ + i;
      if (state_[j] != VarState::Basic && vals_(j) != 0.0) rhs(i) += vals_(j);
    }
    const VectorXd xb = factor_.ftran(rhs);
    for (int p = 0; p < m_; ++p) vals_(basic_[p]) = xb(p);
  }

  void refactorize() {
    factor_.refactor(p_.A, basic_);
    recomputeBasics();
  }

  // Worst single bound violation among the basics. Feasibility verdicts use
  // the max, matching the per-basic thresholds of the phase-1 costs; sums
  // would reject points whose per-row dust is individually acceptable.
  double infeasibility() const {
    double f = 0.0;
    for (int p = 0; p < m_; ++p) {
      const int j = basic_[p];
      if (vals_(j) > hi_(j)) f = std::max(f, vals_(j) - hi_(j));
      if (vals_(j) < lo_(j)) f = std::max(f, lo_(j) - vals_(j));
    }
    return f;
  }

  // Phase-1 cost of each basic position given current values.
  VectorXd phase1Costs() const {
    VectorXd g = VectorXd::Zero(m_);
    for (int p = 0; p < m_; ++p) {
      const int j = basic_[p];
      if (vals_(j) > hi_(j) + opt_.tol_feas) g(p) = 1.0;
      else if (vals_(j) < lo_(j) - opt_.tol_feas) g(p) = -1.0;
    }
    return g;
  }

  VectorXd basicCosts() const {
    VectorXd cb(m_);
    for (int p = 0; p < m_; ++p) cb(p) = cost_(basic_[p]);
    return cb;
  }

  // Reduced costs for all variables given duals y: d_j = cost_j - y'col_j.
  VectorXd reducedCosts(const VectorXd& y, bool phase1) const {
    VectorXd d(N_);
    const VectorXd Aty = p_.A.transpose() * y;
    for (int j = 0; j < n_; ++j) d(j) = (phase1 ? 0.0 : cost_(j)) - Aty(j);
    for (int i = 0; i < m_; ++i) d(n_ + i) = y(i);
    return d;
  }

  int pickEntering(const VectorXd& d, bool bland, const std::vector<char>& skip) const {
    int best = -1;
    double bestScore = opt_.tol_cost;
    for (int j = 0; j < N_; ++j) {
      if (state_[j] == VarState::Basic || skip[j]) continue;
      double score = 0.0;
      switch (state_[j]) {
        case VarState::AtLower: score = -d(j); break;
        case VarState::AtUpper: score = d(j); break;
        case VarState::FreeZero: score = std::abs(d(j)); break;
        case VarState::Basic: break;
      }
      if (score <= opt_.tol_cost) continue;
      if (bland) return j;
      if (score > bestScore) {
        bestScore = score;
        best = j;
      }
    }
    return best;
  }

  // Applies a step of size t along entering direction sigma with FTRANed column w.
  void applyStep(int enter, double sigma, double t, const VectorXd& w) {
    if (t != 0.0) {
      for (int p = 0; p < m_; ++p) vals_(basic_[p]) -= sigma * t * w(p);
      vals_(enter) += sigma * t;
    }
  }

  Solution finish(Status st);

  const Problem& p_;
  Solver::Options opt_;
  int m_ = 0, n_ = 0, N_ = 0;
  VectorXd lo_, hi_, cost_, vals_;
  std::vector<std::int32_t> basic_;
  std::vector<VarState> state_;
  Factor factor_;
  int pivots_ = 0, phase1Pivots_ = 0, sinceRefactor_ = 0, degenStreak_ = 0;
};

Solution SimplexImpl::run(const Basis* warm) {
  // Construction-time infeasibility flags.
  for (int j = 0; j < n_; ++j) {
    if (lo_(j) > hi_(j) + 1e-12) return finish(Status::Infeasible);
  }
  for (int i = 0; i < m_; ++i) {
    if (p_.row_lo(i) > p_.row_hi(i) + 1e-12) return finish(Status::Infeasible);
    if (p_.A.row(i).cwiseAbs().maxCoeff() == 0.0 &&
        (p_.row_lo(i) > 1e-12 || p_.row_hi(i) < -1e-12)) {
      return finish(Status::Infeasible);
    }
  }

  if (warm == nullptr || warm->empty() || !adoptWarm(*warm)) {
    crashBasis();
    factor_.refactor(p_.A, basic_);
    if (factor_.singular()) return finish(Status::NumericalFailure);
  }
  setNonbasicValues();
  recomputeBasics();

  std::vector<char> skip(N_, 0);
  bool bland = false;
  bool phase1 = true;
  int repairs = 0;
  // Feasibility is declared at tol_feas per basic, but a point is only
  // rejected as infeasible (or sent for repair) beyond a 100x margin: near
  // the phase-1 optimum the pricing cutoff can stall progress a little above
  // the target without the problem being infeasible.
  const double accept = 100.0 * opt_.tol_feas;

  while (true) {
    {
      if (pivots_ >= opt_.max_pivots) return finish(Status::NumericalFailure);

      // Phase 1 drives the total bound violation to (near) zero; the point
      // handed to phase 2 must be feasible to working precision because the
      // phase-2 ratio test only prevents violations from growing.
      if (phase1 && infeasibility() <= opt_.tol_feas) {
        phase1 = false;
        std::fill(skip.begin(), skip.end(), 0);
        continue;
      }

      const VectorXd cb = phase1 ? phase1Costs() : basicCosts();
      const VectorXd y = factor_.btran(cb);
      const VectorXd d = reducedCosts(y, phase1);

      const int enter = pickEntering(d, bland, skip);
      if (enter < 0) {
        if (phase1) {
          if (infeasibility() > accept) return finish(Status::Infeasible);
          phase1 = false;
          std::fill(skip.begin(), skip.end(), 0);
          continue;
        }
        // Factorization drift can leave basics slightly out of bounds at the
        // reported optimum; run a bounded number of repair rounds (back to
        // phase 1, then re-optimize) until the point is clean.
        refactorize();
        if (factor_.singular()) return finish(Status::NumericalFailure);
        if (infeasibility() > accept && repairs < 3) {
          ++repairs;
          phase1 = true;
          std::fill(skip.begin(), skip.end(), 0);
          continue;
        }
        return finish(Status::Optimal);
      }

      const double sigma =
          (state_[enter] == VarState::AtLower ||
           (state_[enter] == VarState::FreeZero && d(enter) < 0.0))
              ? 1.0
              : -1.0;
      const VectorXd w = factor_.ftran(column(enter));

      // Collect blocking/slope events.
      std::vector<Event> evs;
      evs.reserve(m_ + 1);
      for (int p = 0; p < m_; ++p) {
        const double delta = sigma * w(p);  // basic value moves at rate -delta
        if (std::abs(delta) <= opt_.tol_pivot) continue;
        const int j = basic_[p];
        const double x = vals_(j);
        const bool above = x > hi_(j) + opt_.tol_feas;
        const bool below = x < lo_(j) - opt_.tol_feas;
        const double ad = std::abs(delta);
        if (delta > 0.0) {  // decreasing
          if (above) {
            evs.push_back({(x - hi_(j)) / delta, p, ad, VarState::AtUpper, ad});
            if (phase1 && finiteLo(lo_(j)))
              evs.push_back({(x - lo_(j)) / delta, p, ad, VarState::AtLower, ad});
          } else if (below) {
            // Already below its lower bound and the move would push it
            // further: in phase 2 it blocks immediately (violations must
            // never grow); phase 1 accounts for the worsening in the slope.
            if (!phase1) evs.push_back({0.0, p, ad, VarState::AtLower, ad});
          } else if (finiteLo(lo_(j))) {
            evs.push_back({std::max(0.0, (x - lo_(j)) / delta), p, ad, VarState::AtLower, ad});
          }
        } else {  // increasing
          if (below) {
            evs.push_back({(x - lo_(j)) / delta, p, ad, VarState::AtLower, ad});
            if (phase1 && finiteHi(hi_(j)))
              evs.push_back({(x - hi_(j)) / delta, p, ad, VarState::AtUpper, ad});
          } else if (above) {
            if (!phase1) evs.push_back({0.0, p, ad, VarState::AtUpper, ad});
          } else if (finiteHi(hi_(j))) {
            evs.push_back({std::max(0.0, (x - hi_(j)) / delta), p, ad, VarState::AtUpper, ad});
          }
        }
      }
      bool hasFlip = false;
      double tFlip = kInf;
      if (state_[enter] != VarState::FreeZero && finiteLo(lo_(enter)) && finiteHi(hi_(enter))) {
        hasFlip = true;
        tFlip = hi_(enter) - lo_(enter);
      }

      int leavePos = -1;
      VarState leaveRest = VarState::AtLower;
      double tStar = -1.0;
      bool flip = false;

      if (phase1 && !bland) {
        // Long-step ratio: walk breakpoints while the infeasibility slope stays negative.
        if (hasFlip) evs.push_back({tFlip, -1, kInf, VarState::AtLower, 0.0});
        std::sort(evs.begin(), evs.end(), [](const Event& a, const Event& b) {
          if (a.t != b.t) return a.t < b.t;
          if (a.absPiv != b.absPiv) return a.absPiv > b.absPiv;
          return a.pos < b.pos;
        });
        double slope = sigma * d(enter);
        for (const auto& ev : evs) {
          slope += ev.dslope;
          if (slope >= -1e-12) {
            tStar = ev.t;
            if (ev.pos < 0) {
              flip = true;
            } else {
              leavePos = ev.pos;
              leaveRest = ev.rest;
            }
            break;
          }
        }
        if (tStar < 0.0) {
          skip[enter] = 1;  // numerically inconsistent column; try another
          continue;
        }
      } else {
        // First-blocking ratio test (phase 2, and phase 1 under Bland's rule).
        double tMin = hasFlip ? tFlip : kInf;
        int bestPos = -1;
        VarState bestRest = VarState::AtLower;
        double bestPiv = 0.0;
        for (const auto& ev : evs) {
          if (!phase1 && ev.dslope == kInf) continue;
          bool better = false;
          if (ev.t < tMin - 1e-12) {
            better = true;
          } else if (ev.t <= tMin + 1e-12 && bestPos >= 0) {
            if (bland) {
              better = basic_[ev.pos] < basic_[bestPos];
            } else {
              better = ev.absPiv > bestPiv + 1e-15 ||
                       (std::abs(ev.absPiv - bestPiv) <= 1e-15 && basic_[ev.pos] < basic_[bestPos]);
            }
          } else if (ev.t <= tMin + 1e-12 && bestPos < 0 && ev.t <= tFlip) {
            better = true;
          }
          if (better) {
            tMin = std::min(tMin, std::max(0.0, ev.t));
            bestPos = ev.pos;
            bestRest = ev.rest;
            bestPiv = ev.absPiv;
          }
        }
        if (bestPos < 0 && !hasFlip) {
          if (phase1) {
            skip[enter] = 1;
            continue;
          }
          return finish(Status::Unbounded);
        }
        if (bestPos < 0 || (hasFlip && tFlip < tMin - 1e-12)) {
          flip = true;
          tStar = tFlip;
        } else {
          tStar = std::max(0.0, tMin);
          leavePos = bestPos;
          leaveRest = bestRest;
        }
      }

      if (tStar <= 1e-12) {
        if (++degenStreak_ > opt_.bland_after) bland = true;
      } else {
        degenStreak_ = 0;
        bland = false;
      }

      applyStep(enter, sigma, tStar, w);
      ++pivots_;
      if (phase1) ++phase1Pivots_;

      if (flip) {
        state_[enter] = (sigma > 0.0) ? VarState::AtUpper : VarState::AtLower;
        vals_(enter) = (sigma > 0.0) ? hi_(enter) : lo_(enter);
        continue;
      }

      const int leave = basic_[leavePos];
      state_[leave] = leaveRest;
      vals_(leave) = (leaveRest == VarState::AtLower) ? lo_(leave) : hi_(leave);
      state_[enter] = VarState::Basic;
      basic_[leavePos] = enter;
      factor_.update(leavePos, w);
      if (++sinceRefactor_ >= opt_.refactor_every) {
        sinceRefactor_ = 0;
        refactorize();
        if (factor_.singular()) return finish(Status::NumericalFailure);
      }
      std::fill(skip.begin(), skip.end(), 0);
    }
  }
  return finish(Status::Optimal);
}

Solution SimplexImpl::finish(Status st) {
  Solution s;
  s.status = st;
  s.pivots = pivots_;
  s.phase1_pivots = phase1Pivots_;
  if (st == Status::Infeasible || st == Status::NumericalFailure) {
    if (static_cast<int>(basic_.size()) == m_) {
      s.basis.basic = {basic_.begin(), basic_.end()};
      s.basis.state = state_;
    }
    return s;
  }

  if (m_ > 0) {
    refactorize();  // fresh values for the reported point
  }
  s.x = vals_.head(n_);
  s.objective = p_.c.dot(s.x);

  // Duals in the maximize convention: c = A'y + z with y = -y_min.
  VectorXd yMin = VectorXd::Zero(m_);
  if (m_ > 0) yMin = factor_.btran(basicCosts());
  s.y = -yMin;
  s.z = VectorXd::Zero(n_);
  const VectorXd Aty = p_.A.transpose() * s.y;
  for (int j = 0; j < n_; ++j) s.z(j) = p_.c(j) - Aty(j);

  // Primal residual over rows and bounds.
  double pr = 0.0;
  const VectorXd ax = p_.A * s.x;
  for (int i = 0; i < m_; ++i) {
    pr = std::max(pr, p_.row_lo(i) - ax(i));
    pr = std::max(pr, ax(i) - p_.row_hi(i));
  }
  for (int j = 0; j < n_; ++j) {
    pr = std::max(pr, lo_(j) - s.x(j));
    pr = std::max(pr, s.x(j) - hi_(j));
  }
  s.primal_residual = std::max(0.0, pr);

  // Dual residual: sign conditions + complementary slackness for a maximize LP.
  double dr = 0.0;
  if (st == Status::Optimal) {
    for (int j = 0; j < N_; ++j) {
      const double zj = (j < n_) ? s.z(j) : s.y(j - n_);
      switch (state_[j]) {
        case VarState::Basic: dr = std::max(dr, std::abs(zj)); break;
        case VarState::AtLower: dr = std::max(dr, zj); break;          // wants z <= 0
        case VarState::AtUpper: dr = std::max(dr, -zj); break;         // wants z >= 0
        case VarState::FreeZero: dr = std::max(dr, std::abs(zj)); break;
      }
    }
  }
  s.dual_residual = std::max(0.0, dr);

  s.basis.basic = {basic_.begin(), basic_.end()};
  s.basis.state = state_;
  return s;
}

}  // namespace

Solution Solver::solve(const Problem& p, const Basis* warm) const {
  const int m = p.numRows();
  const int n = p.numVars();
  if (p.c.size() != n || p.var_lo.size() != n || p.var_hi.size() != n ||
      p.row_lo.size() != m || p.row_hi.size() != m) {
    throw InvalidDimension("lp: inconsistent problem shapes");
  }
  if (!p.c.allFinite()) throw SolverError("lp: objective has non-finite entries");
  if (!p.A.allFinite()) throw SolverError("lp: constraint matrix has non-finite entries");
  SimplexImpl impl(p, opt_);
  return impl.run(warm);
}

int Builder::addVar(double lo, double hi, double obj) {
  lo_.push_back(lo);
  hi_.push_back(hi);
  obj_.push_back(obj);
  return static_cast<int>(lo_.size()) - 1;
}

int Builder::addVars(int count, double lo, double hi) {
  const int first = static_cast<int>(lo_.size());
  for (int k = 0; k < count; ++k) addVar(lo, hi);
  return first;
}

void Builder::setObjective(int var, double coeff) { obj_.at(var) = coeff; }

void Builder::addObjective(int var, double coeff) { obj_.at(var) += coeff; }

void Builder::addRow(const std::vector<std::pair<int, double>>& terms, double lo, double hi) {
  rows_.push_back(terms);
  row_lo_.push_back(lo);
  row_hi_.push_back(hi);
}

Problem Builder::build() const {
  Problem p;
  const int n = numVars();
  const int m = numRows();
  p.c = Eigen::Map<const VectorXd>(obj_.data(), n);
  p.var_lo = Eigen::Map<const VectorXd>(lo_.data(), n);
  p.var_hi = Eigen::Map<const VectorXd>(hi_.data(), n);
  p.row_lo = Eigen::Map<const VectorXd>(row_lo_.data(), m);
  p.row_hi = Eigen::Map<const VectorXd>(row_hi_.data(), m);
  p.A = MatrixXd::Zero(m, n);
  for (int i = 0; i < m; ++i) {
    for (const auto& [j, v] : rows_[i]) p.A(i, j) += v;
  }
  return p;
}

}  // namespace polyrpi::lp
