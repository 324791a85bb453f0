#include "nahmflow/flag.hpp"

#include <cmath>
#include <cstdio>

#include <Eigen/Eigenvalues>

namespace nahmflow {

namespace {

// Fixed generic directions; the one separating the joint spectrum best wins.
const std::array<Eigen::Vector3d, 4> kDirections = {
    Eigen::Vector3d(0.5773502691896258, 0.4082482904638631, 0.7071067811865476),
    Eigen::Vector3d(0.8017837257372732, -0.2672612419124244, 0.5345224838248488),
    Eigen::Vector3d(-0.3015113445777636, 0.9045340337332909, 0.3015113445777636),
    Eigen::Vector3d(0.2182178902359924, 0.4364357804719848, -0.8728715609439696)};

CMatrix joint_eigenbasis(const Triple& t, double* gap_out = nullptr) {
  const int n = t.dim();
  const cplx mi(0.0, -1.0);
  double best_gap = -1.0;
  CMatrix best;
  for (const auto& c : kDirections) {
    CMatrix h = mi * (c(0) * t[0].matrix() + c(1) * t[1].matrix() + c(2) * t[2].matrix());
    h = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    double gap = std::numeric_limits<double>::infinity();
    for (int k = 1; k < n; ++k) gap = std::min(gap, es.eigenvalues()(k) - es.eigenvalues()(k - 1));
    if (gap > best_gap) {
      best_gap = gap;
      best = es.eigenvectors();
    }
  }
  if (gap_out) *gap_out = best_gap;
  return best;
}

}  // namespace

void canonicalize_phases(CMatrix& frame) {
  for (Eigen::Index k = 0; k < frame.cols(); ++k) {
    const double mx = frame.col(k).cwiseAbs().maxCoeff();
    if (mx == 0.0) continue;
    Eigen::Index row = 0;
    while (std::abs(frame(row, k)) < mx * (1.0 - 1e-10)) ++row;
    const cplx z = frame(row, k);
    frame.col(k) *= std::conj(z) / std::abs(z);
    frame(row, k) = cplx(frame(row, k).real(), 0.0);
  }
}

LimitTriple limit_triple(const NahmSolution& s) {
  const Triple t = s.T(s.grid.size() - 1);
  const CMatrix u = joint_eigenbasis(t);
  std::array<CMatrix, 3> proj;
  double dist = 0.0;
  for (int a = 0; a < 3; ++a) {
    const CMatrix rot = u.adjoint() * t[a].matrix() * u;
    const CMatrix diag = rot.diagonal().asDiagonal();
    proj[static_cast<std::size_t>(a)] = u * diag * u.adjoint();
    dist = std::max(dist, (t[a].matrix() - proj[static_cast<std::size_t>(a)]).norm());
  }
  dist /= s.scale();
  if (dist > s.cfg.commute_tol) {
    char msg[128];
    std::snprintf(msg, sizeof msg, "limit_triple: T(L) is %.3e away from commuting (tolerance %.3e)",
                  dist, s.cfg.commute_tol);
    throw PreconditionError(msg);
  }
  return {Triple(AntiHermitian(proj[0]), AntiHermitian(proj[1]), AntiHermitian(proj[2])), dist};
}

Flag flag_from_limit(const Triple& lim, const Configuration& c) {
  const int n = c.n();
  require_same_dim(lim.dim(), n, "flag_from_limit");
  double gap = 0.0;
  const CMatrix u = joint_eigenbasis(lim, &gap);
  if (!(gap > 1e-12 * c.diameter())) {
    throw PreconditionError("flag_from_limit: degenerate joint spectrum");
  }
  const double tol = c.separation() / 3.0;
  std::vector<int> owner(static_cast<std::size_t>(n), -1);  // point -> column of u
  for (int col = 0; col < n; ++col) {
    const CVector v = u.col(col);
    Eigen::Vector3d p;
    for (int a = 0; a < 3; ++a) {
      p(a) = (v.adjoint() * lim[a].matrix() * v)(0, 0).imag();
    }
    int match = -1;
    for (int k = 0; k < n; ++k) {
      if ((p - c.points()[static_cast<std::size_t>(k)]).norm() < tol) {
        if (match >= 0) throw PreconditionError("flag_from_limit: ambiguous eigenvalue matching");
        match = k;
      }
    }
    if (match < 0) {
      throw PreconditionError("flag_from_limit: eigenline matches no configuration point");
    }
    if (owner[static_cast<std::size_t>(match)] >= 0) {
      throw PreconditionError("flag_from_limit: two eigenlines match the same point");
    }
    owner[static_cast<std::size_t>(match)] = col;
  }
  Flag f;
  f.frame.resize(n, n);
  for (int k = 0; k < n; ++k) {
    f.frame.col(k) = u.col(owner[static_cast<std::size_t>(k)]);
    f.labels.push_back(k + 1);
  }
  canonicalize_phases(f.frame);
  return f;
}

Flag berry_robbins_map(const Configuration& c, const SolverConfig& cfg) {
  const NahmSolution s = solve_bvp(Partition::regular(c.n()), c, cfg);
  const LimitTriple lim = limit_triple(s);
  Flag f = flag_from_limit(lim.limit, c);
  f.projection_distance = lim.distance;
  f.diagnostics = s.diagnostics;
  return f;
}

double flag_distance(const Flag& f, const Flag& g) {
  if (f.frame.rows() != g.frame.rows() || f.frame.cols() != g.frame.cols()) {
    throw DimensionError("flag_distance: flags of different size");
  }
  if (f.labels != g.labels) throw PreconditionError("flag_distance: labels are not aligned");
  double d = 0.0;
  for (Eigen::Index k = 0; k < f.frame.cols(); ++k) {
    // sin of the angle between the lines, without the cancellation in 1 - cos^2.
    const CVector fk = f.frame.col(k).normalized();
    const CVector gk = g.frame.col(k).normalized();
    d = std::max(d, (gk - fk * fk.dot(gk)).norm());
  }
  return d;
}

Flag act(const CMatrix& g, const Flag& f) {
  if (!is_unitary(g, 1e-10)) throw PreconditionError("act: matrix is not unitary");
  Flag out = f;
  out.frame = g * f.frame;
  canonicalize_phases(out.frame);
  return out;
}

double check_permutation_equivariance(const Configuration& c, const std::vector<int>& perm,
                                      const SolverConfig& cfg) {
  const Configuration pc = c.permuted(perm);
  const Flag fp = berry_robbins_map(pc, cfg);
  const Flag f = berry_robbins_map(c, cfg);
  Flag back = f;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    back.frame.col(perm[k]) = fp.frame.col(static_cast<Eigen::Index>(k));
  }
  return flag_distance(back, f);
}

double check_so3_equivariance(const Configuration& c, const CMatrix& a, const SolverConfig& cfg) {
  const Eigen::Matrix3d r = rotation_of(a);
  const CMatrix rho = represent_su2(a, irreducible_triple(c.n()));
  const Flag moved = berry_robbins_map(c.rotated(r), cfg);
  const Flag f = berry_robbins_map(c, cfg);
  return flag_distance(moved, act(rho, f));
}

}  // namespace nahmflow
