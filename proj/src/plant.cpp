#include "polyrpi/plant.hpp"

#include <cmath>

#include "polyrpi/errors.hpp"

namespace polyrpi {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd blockDiag(const std::vector<const MatrixXd*>& blocks) {
  Eigen::Index r = 0, c = 0;
  for (const auto* b : blocks) {
    r += b->rows();
    c += b->cols();
  }
  MatrixXd out = MatrixXd::Zero(r, c);
  Eigen::Index ro = 0, co = 0;
  for (const auto* b : blocks) {
    out.block(ro, co, b->rows(), b->cols()) = *b;
    ro += b->rows();
    co += b->cols();
  }
  return out;
}

void checkUnitBounds(const HPolyhedron& set, const char* name, ValidationReport& rep) {
  if ((set.phi().array() - 1.0).abs().maxCoeff() > 0.0) {
    rep.ok = false;
    rep.issues.push_back({"unit-bound", std::string(name) + ": bound vector must be all ones"});
  }
}

// Defensive: HPolyhedron already rejects zero-normal rows at construction,
// but the report carries an explicit code should that guard ever change.
void checkRows(const HPolyhedron& set, const char* name, ValidationReport& rep) {
  for (int r = 0; r < set.numRows(); ++r) {
    if (set.P().row(r).cwiseAbs().maxCoeff() < 1e-12) {
      rep.ok = false;
      rep.issues.push_back({"ZeroRow", std::string(name) + ": row " + std::to_string(r) +
                                           " has zero normal"});
    }
  }
}

void checkBounded(const HPolyhedron& set, const char* name, ValidationReport& rep) {
  if (!isBounded(set)) {
    rep.ok = false;
    rep.issues.push_back({"unbounded", std::string(name) + ": set must be bounded"});
  }
}

}  // namespace

ValidationReport validate(const LpvProblem& p) {
  ValidationReport rep;
  rep.numVertices = p.nv();

  auto issue = [&rep](const char* code, const std::string& msg) {
    rep.ok = false;
    rep.issues.push_back({code, msg});
  };

  if (p.A.rows() != p.A.cols()) issue("shape", "A vertices must be square");
  if (p.B.numVertices() != p.nv() || p.Bp.numVertices() != p.nv())
    issue("shape", "A, B, Bp must share the vertex count");
  if (p.B.rows() != p.nx()) issue("shape", "B row count must match A");
  if (p.Bp.rows() != p.nx()) issue("shape", "Bp row count must match A");
  if (p.nu() < 1) issue("shape", "plant needs at least one control input");
  if (p.np() < 1) issue("shape", "plant needs at least one process noise channel");
  if (p.C.cols() != p.nx()) issue("shape", "C column count must match A");
  if (p.C.rows() < 1) issue("shape", "plant needs at least one output");
  if (p.Deta.rows() != p.C.rows()) issue("shape", "Deta row count must match C");
  if (p.neta() < 1) issue("shape", "plant needs at least one measurement noise channel");

  if (p.X.ambientDim() != p.nx()) issue("shape", "X dimension must match the state");
  if (p.U.ambientDim() != p.nu()) issue("shape", "U dimension must match the input");
  if (p.Udelta && p.Udelta->ambientDim() != p.nu())
    issue("shape", "Udelta dimension must match the input");
  if (p.Pset.ambientDim() != p.np()) issue("shape", "Pset dimension must match Bp");
  if (p.Nset.ambientDim() != p.neta()) issue("shape", "Nset dimension must match Deta");

  if (!rep.ok) return rep;  // bound/size probes assume consistent shapes

  checkUnitBounds(p.X, "X", rep);
  checkUnitBounds(p.U, "U", rep);
  if (p.Udelta) checkUnitBounds(*p.Udelta, "Udelta", rep);
  checkUnitBounds(p.Pset, "Pset", rep);
  checkUnitBounds(p.Nset, "Nset", rep);

  checkRows(p.X, "X", rep);
  checkRows(p.U, "U", rep);
  if (p.Udelta) checkRows(*p.Udelta, "Udelta", rep);
  checkRows(p.Pset, "Pset", rep);
  checkRows(p.Nset, "Nset", rep);

  checkBounded(p.X, "X", rep);
  checkBounded(p.U, "U", rep);
  if (p.Udelta) checkBounded(*p.Udelta, "Udelta", rep);
  checkBounded(p.Pset, "Pset", rep);
  checkBounded(p.Nset, "Nset", rep);

  return rep;
}

AugmentedSystem augment(const LpvProblem& p) {
  const ValidationReport rep = validate(p);
  if (!rep.ok) throw InvalidProblem("augment: " + rep.issues.front().message);

  const int nx = p.nx(), nu = p.nu(), np = p.np(), ny = p.ny(), neta = p.neta();
  const int nxi = nx + nu;

  std::vector<MatrixXd> av, bpv;
  av.reserve(p.nv());
  bpv.reserve(p.nv());
  for (int i = 0; i < p.nv(); ++i) {
    MatrixXd Ai = MatrixXd::Zero(nxi, nxi);
    Ai.topLeftCorner(nx, nx) = p.A.vertex(i);
    Ai.topRightCorner(nx, nu) = p.B.vertex(i);
    Ai.bottomRightCorner(nu, nu) = MatrixXd::Identity(nu, nu);
    av.push_back(std::move(Ai));

    MatrixXd Bpi = MatrixXd::Zero(nxi, np);
    Bpi.topRows(nx) = p.Bp.vertex(i);
    bpv.push_back(std::move(Bpi));
  }

  MatrixXd Baug = MatrixXd::Zero(nxi, nu);
  Baug.bottomRows(nu) = MatrixXd::Identity(nu, nu);

  MatrixXd Caug = MatrixXd::Zero(2 * ny + nu, nxi + nx);
  Caug.topLeftCorner(ny, nx) = p.C;
  Caug.block(ny, nx, nu, nu) = MatrixXd::Identity(nu, nu);
  Caug.bottomRightCorner(ny, nx) = p.C;

  MatrixXd Detaaug = MatrixXd::Zero(2 * ny + nu, neta);
  Detaaug.topRows(ny) = p.Deta;

  const MatrixXd XP = p.X.P();
  const MatrixXd UP = p.U.P();
  const MatrixXd Xi = blockDiag({&XP, &UP});
  const MatrixXd PP = p.Pset.P();
  const MatrixXd NP = p.Nset.P();
  const MatrixXd Db = blockDiag({&PP, &NP, &NP});

  return AugmentedSystem{MatrixPolytope(std::move(av)),
                         std::move(Baug),
                         MatrixPolytope(std::move(bpv)),
                         std::move(Caug),
                         std::move(Detaaug),
                         HPolyhedron(Xi, VectorXd::Ones(Xi.rows())),
                         HPolyhedron(Db, VectorXd::Ones(Db.rows()))};
}

}  // namespace polyrpi
