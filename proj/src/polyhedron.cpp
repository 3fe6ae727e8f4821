#include "polyrpi/polyhedron.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "polyrpi/errors.hpp"
#include "polyrpi/rng.hpp"

namespace polyrpi {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

lp::Solution solveOrThrow(const lp::Problem& p, const char* what) {
  const auto s = lp::Solver().solve(p);
  if (s.status == lp::Status::NumericalFailure)
    throw SolverError(std::string("lp failed while ") + what);
  return s;
}

}  // namespace

HPolyhedron::HPolyhedron(MatrixXd P, VectorXd phi) : P_(std::move(P)), phi_(std::move(phi)) {
  if (P_.rows() != phi_.size()) throw InvalidDimension("polyhedron: row count mismatch");
  if (P_.rows() == 0 || P_.cols() == 0) throw InvalidDimension("polyhedron: empty description");
  if (!P_.allFinite() || !phi_.allFinite())
    throw InvalidProblem("polyhedron: non-finite entries");
  for (int i = 0; i < P_.rows(); ++i) {
    if (phi_(i) <= 0.0)
      throw InvalidProblem("polyhedron: bound vector must be strictly positive");
    if (P_.row(i).cwiseAbs().maxCoeff() < 1e-12)
      throw InvalidProblem("polyhedron: (near-)zero row normal");
  }
}

HPolyhedron HPolyhedron::box(const VectorXd& lo, const VectorXd& hi) {
  const int n = static_cast<int>(lo.size());
  if (hi.size() != n) throw InvalidDimension("box: bound sizes differ");
  MatrixXd P(2 * n, n);
  VectorXd phi(2 * n);
  P.topRows(n) = MatrixXd::Identity(n, n);
  P.bottomRows(n) = -MatrixXd::Identity(n, n);
  phi.head(n) = hi;
  phi.tail(n) = -lo;
  return HPolyhedron(P, phi);
}

HPolyhedron HPolyhedron::unitBox(int dim) {
  return box(VectorXd::Constant(dim, -1.0), VectorXd::Constant(dim, 1.0));
}

bool HPolyhedron::contains(const VectorXd& x, double tol) const {
  if (x.size() != ambientDim()) throw InvalidDimension("contains: point dimension mismatch");
  return ((P_ * x - phi_).array() <= tol).all();
}

HPolyhedron HPolyhedron::normalized() const {
  MatrixXd P = P_;
  for (int i = 0; i < P.rows(); ++i) P.row(i) /= phi_(i);
  return HPolyhedron(P, VectorXd::Ones(P.rows()));
}

ContainmentResult checkContainment(const HPolyhedron& inner, const HPolyhedron& outer,
                                   double tol) {
  if (inner.ambientDim() != outer.ambientDim())
    throw InvalidDimension("containment: ambient dimensions differ");
  const int l1 = inner.numRows();
  const int l2 = outer.numRows();
  const int n = inner.ambientDim();

  ContainmentResult res;
  res.Q = MatrixXd::Zero(l2, l1);

  for (int r = 0; r < l2; ++r) {
    lp::Problem p;
    p.c = -inner.phi();  // maximize -q'phi1 == minimize q'phi1
    p.A = inner.P().transpose();
    p.row_lo = outer.P().row(r).transpose();
    p.row_hi = p.row_lo;
    p.var_lo = VectorXd::Zero(l1);
    p.var_hi = VectorXd::Constant(l1, lp::kInf);
    const auto s = solveOrThrow(p, "recovering containment multipliers");
    if (s.status == lp::Status::Infeasible) {
      res.contained = false;
      res.violatedRow = r;
      return res;
    }
    if (s.status != lp::Status::Optimal)
      throw SolverError("containment: unexpected solver status");
    const double value = -s.objective;
    if (value > outer.phi()(r) + tol) {
      res.contained = false;
      res.violatedRow = r;
      return res;
    }
    res.Q.row(r) = s.x.cwiseMax(0.0).transpose();
  }

  res.contained = true;
  res.eqResidual = (res.Q * inner.P() - outer.P()).cwiseAbs().maxCoeff();
  res.ineqResidual =
      std::max(0.0, (res.Q * inner.phi() - outer.phi()).maxCoeff());
  return res;
}

double supportValue(const HPolyhedron& set, const VectorXd& dir) {
  lp::Problem p;
  p.c = dir;
  p.A = set.P();
  p.row_lo = VectorXd::Constant(set.numRows(), -lp::kInf);
  p.row_hi = set.phi();
  p.var_lo = VectorXd::Constant(set.ambientDim(), -lp::kInf);
  p.var_hi = VectorXd::Constant(set.ambientDim(), lp::kInf);
  const auto s = solveOrThrow(p, "computing a support value");
  if (s.status == lp::Status::Unbounded) return lp::kInf;
  if (s.status != lp::Status::Optimal)
    throw SolverError("support: unexpected solver status");
  return s.objective;
}

bool isBounded(const HPolyhedron& set) {
  const int n = set.ambientDim();
  for (int sgn : {1, -1}) {
    for (int j = 0; j < n; ++j) {
      lp::Problem p;
      p.c = sgn * VectorXd::Unit(n, j);
      p.A = set.P();
      p.row_lo = VectorXd::Constant(set.numRows(), -lp::kInf);
      p.row_hi = VectorXd::Zero(set.numRows());
      p.var_lo = VectorXd::Constant(n, -1.0);
      p.var_hi = VectorXd::Constant(n, 1.0);
      const auto s = solveOrThrow(p, "probing recession directions");
      if (s.status == lp::Status::Optimal && s.objective > 1e-9) return false;
    }
  }
  return true;
}

std::vector<VectorXd> enumerateVertices(const HPolyhedron& set, double tol) {
  const int n = set.ambientDim();
  const int l = set.numRows();
  if (n > 4) throw UnsupportedDimension("vertex enumeration supports dimension <= 4");
  if (!isBounded(set)) throw UnboundedSet("vertex enumeration requires a bounded set");

  std::vector<VectorXd> verts;
  if (l < n) return verts;
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    MatrixXd M(n, n);
    VectorXd b(n);
    for (int k = 0; k < n; ++k) {
      M.row(k) = set.P().row(idx[k]);
      b(k) = set.phi()(idx[k]);
    }
    Eigen::FullPivLU<MatrixXd> lu(M);
    lu.setThreshold(1e-10);
    if (lu.rank() == n) {
      const VectorXd x = lu.solve(b);
      if (x.allFinite() && set.contains(x, tol)) {
        bool dup = false;
        for (const auto& v : verts) {
          if ((v - x).cwiseAbs().maxCoeff() <= tol) {
            dup = true;
            break;
          }
        }
        if (!dup) verts.push_back(x);
      }
    }
    int k = n - 1;
    while (k >= 0 && idx[k] == l - n + k) --k;
    if (k < 0) break;
    ++idx[k];
    for (int j = k + 1; j < n; ++j) idx[j] = idx[j - 1] + 1;
  }
  std::sort(verts.begin(), verts.end(), [](const VectorXd& a, const VectorXd& b) {
    for (int i = 0; i < a.size(); ++i) {
      if (a(i) != b(i)) return a(i) < b(i);
    }
    return false;
  });
  return verts;
}

namespace {

double polygonArea(std::vector<Eigen::Vector2d> pts) {
  if (pts.size() < 3) return 0.0;
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  std::sort(pts.begin(), pts.end(), [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return std::atan2(a.y() - c.y(), a.x() - c.x()) < std::atan2(b.y() - c.y(), b.x() - c.x());
  });
  double area = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto& a = pts[k];
    const auto& b = pts[(k + 1) % pts.size()];
    area += a.x() * b.y() - b.x() * a.y();
  }
  return std::abs(area) / 2.0;
}

double volume3d(const HPolyhedron& set, const std::vector<VectorXd>& verts) {
  // Fan decomposition: facet polygons triangulated, tetrahedra to the origin
  // (interior by construction).
  const HPolyhedron clean = removeRedundancy(set);
  double vol = 0.0;
  for (int r = 0; r < clean.numRows(); ++r) {
    const VectorXd nrm = clean.P().row(r).transpose();
    std::vector<VectorXd> face;
    for (const auto& v : verts) {
      if (std::abs(nrm.dot(v) - clean.phi()(r)) <= 1e-7 * std::max(1.0, std::abs(clean.phi()(r))))
        face.push_back(v);
    }
    if (face.size() < 3) continue;
    VectorXd c = VectorXd::Zero(3);
    for (const auto& v : face) c += v;
    c /= static_cast<double>(face.size());
    // In-plane basis for angular ordering.
    Eigen::Vector3d nn = nrm.normalized();
    Eigen::Vector3d u1 = (face[0] - c).normalized();
    Eigen::Vector3d u2 = nn.cross(u1).normalized();
    std::sort(face.begin(), face.end(), [&](const VectorXd& a, const VectorXd& b) {
      const Eigen::Vector3d da = a - c, db = b - c;
      return std::atan2(u2.dot(da), u1.dot(da)) < std::atan2(u2.dot(db), u1.dot(db));
    });
    for (std::size_t k = 1; k + 1 < face.size(); ++k) {
      Eigen::Matrix3d T;
      T.col(0) = face[0];
      T.col(1) = face[k];
      T.col(2) = face[k + 1];
      vol += std::abs(T.determinant()) / 6.0;
    }
  }
  return vol;
}

}  // namespace

VolumeResult volume(const HPolyhedron& set, std::uint64_t seed, long long minSamples) {
  const int n = set.ambientDim();
  if (n > 4) throw UnsupportedDimension("volume supports dimension <= 4");
  const auto verts = enumerateVertices(set);
  if (verts.empty()) throw SolverError("volume: vertex enumeration returned nothing");

  VolumeResult out;
  if (n == 1) {
    double lo = verts.front()(0), hi = verts.front()(0);
    for (const auto& v : verts) {
      lo = std::min(lo, v(0));
      hi = std::max(hi, v(0));
    }
    out.value = hi - lo;
    return out;
  }
  if (n == 2) {
    std::vector<Eigen::Vector2d> pts;
    pts.reserve(verts.size());
    for (const auto& v : verts) pts.emplace_back(v(0), v(1));
    out.value = polygonArea(std::move(pts));
    return out;
  }
  if (n == 3) {
    out.value = volume3d(set, verts);
    return out;
  }

  // n == 4: Monte Carlo over the vertex bounding box.
  VectorXd lo = verts.front(), hi = verts.front();
  for (const auto& v : verts) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  double boxVol = 1.0;
  for (int j = 0; j < n; ++j) boxVol *= hi(j) - lo(j);
  Rng rng(seed);
  long long hits = 0;
  VectorXd x(n);
  for (long long s = 0; s < minSamples; ++s) {
    for (int j = 0; j < n; ++j) x(j) = rng.uniform(lo(j), hi(j));
    if (set.contains(x, 0.0)) ++hits;
  }
  const double pHat = static_cast<double>(hits) / static_cast<double>(minSamples);
  out.value = pHat * boxVol;
  out.stderror = boxVol * std::sqrt(std::max(0.0, pHat * (1.0 - pHat) /
                                                       static_cast<double>(minSamples)));
  out.samples = minSamples;
  return out;
}

HPolyhedron removeRedundancy(const HPolyhedron& set) {
  MatrixXd P = set.P();
  VectorXd phi = set.phi();
  std::vector<int> keep(P.rows());
  std::iota(keep.begin(), keep.end(), 0);

  for (int r = 0; r < static_cast<int>(keep.size());) {
    if (keep.size() == 1) break;
    std::vector<int> others;
    for (int k : keep) {
      if (k != keep[r]) others.push_back(k);
    }
    lp::Problem p;
    const int row = keep[r];
    p.c = P.row(row).transpose();
    p.A.resize(static_cast<int>(others.size()), P.cols());
    p.row_lo = VectorXd::Constant(static_cast<int>(others.size()), -lp::kInf);
    p.row_hi.resize(static_cast<int>(others.size()));
    for (std::size_t k = 0; k < others.size(); ++k) {
      p.A.row(static_cast<int>(k)) = P.row(others[k]);
      p.row_hi(static_cast<int>(k)) = phi(others[k]);
    }
    p.var_lo = VectorXd::Constant(P.cols(), -lp::kInf);
    p.var_hi = VectorXd::Constant(P.cols(), lp::kInf);
    const auto s = solveOrThrow(p, "pruning redundant rows");
    const bool redundant =
        s.status == lp::Status::Optimal && s.objective <= phi(row) + 1e-9;
    if (redundant) {
      keep.erase(keep.begin() + r);
    } else {
      ++r;
    }
  }

  MatrixXd Pk(static_cast<int>(keep.size()), P.cols());
  VectorXd pk(static_cast<int>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    Pk.row(static_cast<int>(k)) = P.row(keep[k]);
    pk(static_cast<int>(k)) = phi(keep[k]);
  }
  return HPolyhedron(Pk, pk);
}

HPolyhedron project(const HPolyhedron& set, const std::vector<int>& keepDims) {
  const int n = set.ambientDim();
  if (keepDims.empty()) throw InvalidConfig("project: keepDims must be nonempty");
  std::vector<char> kept(n, 0);
  for (int d : keepDims) {
    if (d < 0 || d >= n) throw InvalidConfig("project: dimension index out of range");
    if (kept[d]) throw InvalidConfig("project: repeated dimension index");
    kept[d] = 1;
  }

  MatrixXd P = set.P();
  VectorXd phi = set.phi();

  for (int e = n - 1; e >= 0; --e) {
    if (kept[e]) continue;
    std::vector<int> zero, pos, neg;
    for (int i = 0; i < P.rows(); ++i) {
      const double c = P(i, e);
      if (std::abs(c) <= 1e-12) zero.push_back(i);
      else if (c > 0.0) pos.push_back(i);
      else neg.push_back(i);
    }
    std::vector<Eigen::RowVectorXd> newRows;
    std::vector<double> newPhi;
    for (int i : zero) {
      newRows.emplace_back(P.row(i));
      newPhi.push_back(phi(i));
    }
    for (int i : pos) {
      for (int j : neg) {
        Eigen::RowVectorXd row = P.row(i) / P(i, e) - P.row(j) / P(j, e);
        row(e) = 0.0;  // clear roundoff on the eliminated column
        const double b = phi(i) / P(i, e) - phi(j) / P(j, e);
        // Opposite parallel rows combine to a vacuous 0 <= b (b > 0); drop them.
        if (row.cwiseAbs().maxCoeff() < 1e-12) continue;
        newRows.push_back(std::move(row));
        newPhi.push_back(b);
      }
    }
    if (newRows.empty()) throw UnboundedSet("project: projection is unbounded");
    MatrixXd Pn(static_cast<int>(newRows.size()), P.cols());
    VectorXd pn(static_cast<int>(newRows.size()));
    for (std::size_t k = 0; k < newRows.size(); ++k) {
      Pn.row(static_cast<int>(k)) = newRows[k];
      pn(static_cast<int>(k)) = newPhi[k];
    }
    const HPolyhedron pruned = removeRedundancy(HPolyhedron(Pn, pn));
    P = pruned.P();
    phi = pruned.phi();
  }

  MatrixXd Pout(P.rows(), static_cast<int>(keepDims.size()));
  for (std::size_t k = 0; k < keepDims.size(); ++k) Pout.col(static_cast<int>(k)) = P.col(keepDims[k]);
  return HPolyhedron(Pout, phi);
}

}  // namespace polyrpi
