#include "nahmflow/slodowy.hpp"

#include <cmath>
#include <random>

#include <Eigen/QR>

#include "nahmflow/linalg.hpp"

namespace nahmflow {

namespace {

// Column-major vec: vec(AZ - ZA) = (I (x) A - A^T (x) I) vec(Z).
CMatrix ad_operator(const CMatrix& a) {
  const Eigen::Index n = a.rows();
  CMatrix k = CMatrix::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      CMatrix e = CMatrix::Zero(n, n);
      e(i, j) = 1.0;
      const CMatrix img = a * e - e * a;
      k.col(j * n + i) = Eigen::Map<const CVector>(img.data(), n * n);
    }
  }
  return k;
}

CMatrix unvec(const CVector& v, Eigen::Index n) { return Eigen::Map<const CMatrix>(v.data(), n, n); }

}  // namespace

std::vector<CMatrix> centralizer_in_gl(const CMatrix& x, double tol) {
  if (x.rows() != x.cols()) throw DimensionError("centralizer_in_gl: matrix is not square");
  const CMatrix ker = null_space(ad_operator(x), tol);
  std::vector<CMatrix> out;
  for (Eigen::Index k = 0; k < ker.cols(); ++k) out.push_back(unvec(ker.col(k), x.rows()));
  return out;
}

int centralizer_dim_formula(const Partition& p) {
  int d = 0;
  for (int c : p.conjugate()) d += c * c;
  return d;
}

SlodowySlice slodowy_slice(const Partition& rho) {
  SlodowySlice s;
  s.partition = rho;
  s.sl2 = complexify(rep_from_partition(rho));
  s.zx_basis = centralizer_in_gl(s.sl2.X);
  s.dim = static_cast<int>(s.zx_basis.size());
  return s;
}

SlicePoint slice_point(const SlodowySlice& s, const CVector& coords) {
  if (coords.size() != s.dim) throw DimensionError("slice_point: wrong coordinate count");
  SlicePoint p;
  p.coords = coords;
  p.matrix = s.sl2.Y;
  for (int j = 0; j < s.dim; ++j) p.matrix += coords(j) * s.zx_basis[static_cast<std::size_t>(j)];
  return p;
}

TransversalityReport transversality_check(const SlodowySlice& s, double tol) {
  const Eigen::Index n = s.sl2.Y.rows();
  const CMatrix ady = ad_operator(s.sl2.Y);
  CMatrix span(n * n, ady.cols() + s.dim);
  span.leftCols(ady.cols()) = ady;
  for (int j = 0; j < s.dim; ++j) {
    span.col(ady.cols() + j) =
        Eigen::Map<const CVector>(s.zx_basis[static_cast<std::size_t>(j)].data(), n * n);
  }
  TransversalityReport r;
  r.expected = static_cast<int>(n * n);
  r.rank = numerical_rank(span, tol);
  r.deficiency = r.expected - r.rank;
  return r;
}

CVector chi_map(const CMatrix& m) { return charpoly(m); }
CVector chi_map(const SlicePoint& p) { return charpoly(p.matrix); }

namespace {

struct Eval {
  CVector f;  // scaled residual
  CMatrix j;  // scaled Jacobian
};

Eval evaluate(const SlodowySlice& s, const CVector& w, const CVector& target, double unit) {
  const SlicePoint p = slice_point(s, w);
  std::vector<CMatrix> b;
  const CVector c = charpoly(p.matrix, b);
  const Eigen::Index n = c.size();
  Eval e;
  e.f.resize(n);
  e.j.resize(n, s.dim);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double sc = std::pow(unit, static_cast<double>(k + 1));
    e.f(k) = (c(k) - target(k)) / sc;
    for (int q = 0; q < s.dim; ++q) {
      e.j(k, q) = -(b[static_cast<std::size_t>(k)] * s.zx_basis[static_cast<std::size_t>(q)]).trace() / sc;
    }
  }
  return e;
}

}  // namespace

SliceIntersection orbit_slice_intersection(const Configuration& c, const Partition& rho,
                                           std::uint64_t seed, int starts) {
  const int n = c.n();
  if (rho.n() != n) throw DimensionError("orbit_slice_intersection: partition does not match n");
  if (starts < 1) throw PreconditionError("orbit_slice_intersection: starts must be >= 1");
  const CVector sigma = c.beta_spectrum();
  const double unit = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (std::abs(sigma(a) - sigma(b)) <= 1e-8 * unit) {
        throw PreconditionError("orbit_slice_intersection: y_k + i z_k are not distinct");
      }
    }
  }
  const CVector target = poly_from_roots(sigma);
  const SlodowySlice s = slodowy_slice(rho);

  SliceIntersection out;
  out.starts = starts;
  out.expected_local_dim = s.dim - n;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int st = 0; st < starts; ++st) {
    CVector w(s.dim);
    for (int q = 0; q < s.dim; ++q) w(q) = cplx(g(rng), g(rng)) * unit;
    Eval e = evaluate(s, w, target, unit);
    bool ok = false;
    for (int it = 0; it < 200; ++it) {
      if (e.f.norm() < 1e-13) {
        ok = true;
        break;
      }
      // Newton step for the square case, minimum-norm Gauss-Newton otherwise.
      const CVector dw = e.j.completeOrthogonalDecomposition().solve(-e.f);
      double step = 1.0;
      bool moved = false;
      while (step > 1e-6) {
        const CVector trial = w + step * dw;
        const Eval et = evaluate(s, trial, target, unit);
        if (et.f.norm() < e.f.norm()) {
          w = trial;
          e = et;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) {
        ok = e.f.norm() < 1e-11;
        break;
      }
    }
    if (!ok) continue;
    ++out.converged_starts;
    const SlicePoint p = slice_point(s, w);
    bool dup = false;
    for (const auto& q : out.points) {
      if ((q.matrix - p.matrix).norm() <= 1e-8 * unit) dup = true;
    }
    if (dup) continue;
    const int rank = numerical_rank(e.j, 1e-8);
    out.points.push_back(p);
    out.jacobian_ranks.push_back(rank);
    out.local_dims.push_back(s.dim - rank);
    out.max_residual = std::max(out.max_residual, e.f.norm());
  }
  if (out.points.empty()) {
    throw std::runtime_error("orbit_slice_intersection: no start converged (" +
                             std::to_string(starts) + " starts)");
  }
  return out;
}

}  // namespace nahmflow
