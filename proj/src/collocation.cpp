#include "nahmflow/collocation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "nahmflow/linalg.hpp"

namespace nahmflow::collocation {

namespace {

using Mats = std::array<CMatrix, 3>;

Mats mats_from(int n, const double* c) {
  const int d = n * n;
  return {u_from_coords(n, c), u_from_coords(n, c + d), u_from_coords(n, c + 2 * d)};
}

void coords_into(const Mats& m, double* out) {
  const int d = static_cast<int>(m[0].rows() * m[0].rows());
  u_coords(m[0], out);
  u_coords(m[1], out + d);
  u_coords(m[2], out + 2 * d);
}

// Symmetric bilinear form with Q(v, v)_i = [v_j, v_k].
Mats quad(const Mats& a, const Mats& b) {
  Mats q;
  for (int i = 0; i < 3; ++i) {
    const auto j = static_cast<std::size_t>((i + 1) % 3);
    const auto k = static_cast<std::size_t>((i + 2) % 3);
    q[static_cast<std::size_t>(i)] =
        0.5 * (commutator(a[j], b[k]) + commutator(b[j], a[k]));
  }
  return q;
}

// Linearized pole operator applied to V.
Mats pole_operator(const Mats& sigma, const Mats& v) {
  Mats out;
  for (int i = 0; i < 3; ++i) {
    const auto j = static_cast<std::size_t>((i + 1) % 3);
    const auto k = static_cast<std::size_t>((i + 2) % 3);
    out[static_cast<std::size_t>(i)] = commutator(sigma[j], v[k]) + commutator(v[j], sigma[k]);
  }
  return out;
}

struct NodeEval {
  RVector f;  // dV/dt in coordinates
  RMatrix D;  // derivative of f with respect to V
};

NodeEval eval_node(const Problem& p, double t, const double* x) {
  const int n = p.n;
  const int d = n * n;
  const int N = 3 * d;
  const Mats v = mats_from(n, x);
  Mats tt = v;
  Mats fm;
  if (p.has_pole) {
    const Mats lin = pole_operator(p.sigma, v);
    for (std::size_t i = 0; i < 3; ++i) tt[i] += p.sigma[i] / t;
    for (int i = 0; i < 3; ++i) {
      const auto j = static_cast<std::size_t>((i + 1) % 3);
      const auto k = static_cast<std::size_t>((i + 2) % 3);
      fm[static_cast<std::size_t>(i)] =
          -(lin[static_cast<std::size_t>(i)] / t + commutator(v[j], v[k]));
    }
  } else {
    for (int i = 0; i < 3; ++i) {
      const auto j = static_cast<std::size_t>((i + 1) % 3);
      const auto k = static_cast<std::size_t>((i + 2) % 3);
      fm[static_cast<std::size_t>(i)] = -commutator(v[j], v[k]);
    }
  }
  NodeEval e;
  e.f.resize(N);
  coords_into(fm, e.f.data());
  const std::array<RMatrix, 3> ad = {ad_matrix(tt[0]), ad_matrix(tt[1]), ad_matrix(tt[2])};
  e.D = RMatrix::Zero(N, N);
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const int k = (i + 2) % 3;
    // (D delta)_i = -(ad_{T_j} delta_k - ad_{T_k} delta_j)
    e.D.block(i * d, k * d, d, d) = -ad[static_cast<std::size_t>(j)];
    e.D.block(i * d, j * d, d, d) = ad[static_cast<std::size_t>(k)];
  }
  return e;
}

RVector eval_f(const Problem& p, double t, const double* x) {
  const int n = p.n;
  const Mats v = mats_from(n, x);
  Mats fm;
  const Mats lin = p.has_pole ? pole_operator(p.sigma, v) : Mats{};
  for (int i = 0; i < 3; ++i) {
    const auto j = static_cast<std::size_t>((i + 1) % 3);
    const auto k = static_cast<std::size_t>((i + 2) % 3);
    CMatrix q = -commutator(v[j], v[k]);
    if (p.has_pole) q -= lin[static_cast<std::size_t>(i)] / t;
    fm[static_cast<std::size_t>(i)] = q;
  }
  RVector f(3 * n * n);
  coords_into(fm, f.data());
  return f;
}

struct IntervalBlocks {
  RVector r;
  RMatrix a;  // d r / d x_m
  RMatrix b;  // d r / d x_{m+1}
};

RVector interval_residual(const Problem& p, const RVector& x, int m, const RVector& fm,
                          const RVector& fn) {
  const int N = p.block();
  const double h = p.t[static_cast<std::size_t>(m + 1)] - p.t[static_cast<std::size_t>(m)];
  const double tc = p.t[static_cast<std::size_t>(m)] + 0.5 * h;
  const auto xm = x.segment(static_cast<Eigen::Index>(m) * N, N);
  const auto xn = x.segment(static_cast<Eigen::Index>(m + 1) * N, N);
  const RVector vc = 0.5 * (xm + xn) + (h / 8.0) * (fm - fn);
  const RVector fc = eval_f(p, tc, vc.data());
  return xn - xm - (h / 6.0) * (fm + 4.0 * fc + fn);
}

IntervalBlocks interval_blocks(const Problem& p, const RVector& x, int m, const NodeEval& em,
                               const NodeEval& en) {
  const int N = p.block();
  const double h = p.t[static_cast<std::size_t>(m + 1)] - p.t[static_cast<std::size_t>(m)];
  const double tc = p.t[static_cast<std::size_t>(m)] + 0.5 * h;
  const auto xm = x.segment(static_cast<Eigen::Index>(m) * N, N);
  const auto xn = x.segment(static_cast<Eigen::Index>(m + 1) * N, N);
  const RVector vc = 0.5 * (xm + xn) + (h / 8.0) * (em.f - en.f);
  const NodeEval ec = eval_node(p, tc, vc.data());
  IntervalBlocks out;
  out.r = xn - xm - (h / 6.0) * (em.f + 4.0 * ec.f + en.f);
  const RMatrix id = RMatrix::Identity(N, N);
  const RMatrix dc = ec.D;
  out.a = -id - (h / 6.0) * em.D - (h / 3.0) * dc - (h * h / 12.0) * (dc * em.D);
  out.b = id - (h / 6.0) * en.D - (h / 3.0) * dc + (h * h / 12.0) * (dc * en.D);
  return out;
}

struct BoundaryRows {
  RVector r;
  RMatrix j;  // rows x N, with respect to the node's block
};

// Group unbounded columns by eigenvalue so the correction coefficient is shared.
std::vector<std::pair<double, RMatrix>> unbounded_groups(const PoleModes& modes) {
  std::vector<std::pair<double, RMatrix>> groups;
  const auto& u = modes.unbounded;
  Eigen::Index start = 0;
  while (start < u.cols()) {
    Eigen::Index end = start + 1;
    const double lam = modes.unbounded_eig[static_cast<std::size_t>(start)];
    while (end < u.cols() &&
           std::abs(modes.unbounded_eig[static_cast<std::size_t>(end)] - lam) < 1e-6) {
      ++end;
    }
    groups.emplace_back(lam, u.middleCols(start, end - start));
    start = end;
  }
  return groups;
}

BoundaryRows left_rows_impl(const Problem& p, const RVector& x, bool with_jacobian) {
  const int n = p.n;
  const int d = n * n;
  const int N = 3 * d;
  const auto x0 = x.head(N);
  BoundaryRows out;
  if (p.left == LeftBoundary::Fixed) {
    out.r.resize(2 * d);
    out.r.head(d) = p.pole_weight * (x0.segment(d, d) - u_coords(p.fixed_target[0]));
    out.r.tail(d) = p.pole_weight * (x0.segment(2 * d, d) - u_coords(p.fixed_target[1]));
    if (with_jacobian) {
      out.j = RMatrix::Zero(2 * d, N);
      out.j.block(0, d, 2 * d, 2 * d) = p.pole_weight * RMatrix::Identity(2 * d, 2 * d);
    }
    return out;
  }
  const int k = static_cast<int>(p.modes.unbounded.cols());
  out.r.resize(k);
  if (with_jacobian) out.j.resize(k, N);
  if (k == 0) return out;

  const double eps = p.t.front();
  const std::size_t ng = p.modes.bounded.size();
  std::vector<RVector> vg(ng);
  std::vector<Mats> vgm(ng);
  for (std::size_t g = 0; g < ng; ++g) {
    const RMatrix& q = p.modes.bounded[g];
    vg[g] = q * (q.transpose() * x0);
    vgm[g] = mats_from(n, vg[g].data());
  }
  const auto groups = unbounded_groups(p.modes);
  Eigen::Index row = 0;
  for (const auto& [lam, q] : groups) {
    RVector target = x0;
    if (p.pole_correction) {
      for (std::size_t g = 0; g < ng; ++g) {
        for (std::size_t hh = 0; hh < ng; ++hh) {
          const double c =
              eps / (lam + p.modes.bounded_exp[g] + p.modes.bounded_exp[hh] + 1.0);
          const Mats qm = quad(vgm[g], vgm[hh]);
          RVector qv(N);
          coords_into(qm, qv.data());
          target += c * qv;
        }
      }
    }
    out.r.segment(row, q.cols()) = p.pole_weight * (q.transpose() * target);
    if (with_jacobian) {
      RMatrix kmat = RMatrix::Identity(N, N);
      if (p.pole_correction) {
        for (int col = 0; col < N; ++col) {
          RVector acc = RVector::Zero(N);
          for (std::size_t g = 0; g < ng; ++g) {
            const RMatrix& qg = p.modes.bounded[g];
            const RVector pd = qg * qg.row(col).transpose();
            if (pd.squaredNorm() == 0.0) continue;
            const Mats pdm = mats_from(n, pd.data());
            for (std::size_t hh = 0; hh < ng; ++hh) {
              const double c =
                  2.0 * eps / (lam + p.modes.bounded_exp[g] + p.modes.bounded_exp[hh] + 1.0);
              RVector qv(N);
              coords_into(quad(pdm, vgm[hh]), qv.data());
              acc += c * qv;
            }
          }
          kmat.col(col) += acc;
        }
      }
      out.j.middleRows(row, q.cols()) = p.pole_weight * (q.transpose() * kmat);
    }
    row += q.cols();
  }
  return out;
}

// Re(-i tr(G E_e)) for every basis element E_e of u(n).
RVector trace_pairing(const CMatrix& g) {
  const int n = static_cast<int>(g.rows());
  RVector out(n * n);
  const cplx mi(0.0, -1.0);
  for (int e = 0; e < n * n; ++e) {
    const CMatrix be = u_basis(n, e);
    out(e) = (mi * (g.cwiseProduct(be.transpose())).sum()).real();
  }
  return out;
}

BoundaryRows right_rows_impl(const Problem& p, const RVector& x, bool with_jacobian) {
  const int n = p.n;
  const int d = n * n;
  const int N = 3 * d;
  const auto xl = x.tail(N);
  Mats tt = mats_from(n, xl.data());
  if (p.has_pole) {
    const double L = p.t.back();
    for (std::size_t i = 0; i < 3; ++i) tt[i] += p.sigma[i] / L;
  }
  const int rows = p.right_rows();
  BoundaryRows out;
  out.r.resize(rows);
  if (with_jacobian) out.j = RMatrix::Zero(rows, N);

  std::array<RMatrix, 3> ad;
  if (with_jacobian) ad = {ad_matrix(tt[0]), ad_matrix(tt[1]), ad_matrix(tt[2])};
  int row = 0;
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3;
    const CMatrix c = commutator(tt[static_cast<std::size_t>(a)], tt[static_cast<std::size_t>(b)]);
    u_coords(c, out.r.data() + row);
    out.r.segment(row, d) *= p.commutator_weight;
    if (with_jacobian) {
      // d[T_a, T_b] = -ad_{T_b} dT_a + ad_{T_a} dT_b
      out.j.block(row, a * d, d, d) = -p.commutator_weight * ad[static_cast<std::size_t>(b)];
      out.j.block(row, b * d, d, d) = p.commutator_weight * ad[static_cast<std::size_t>(a)];
    }
    row += d;
  }

  const cplx mi(0.0, -1.0);
  for (const auto& dir : p.directions) {
    CMatrix h = mi * (dir(0) * tt[0] + dir(1) * tt[1] + dir(2) * tt[2]);
    h = 0.5 * (h + h.adjoint());
    CMatrix pw = CMatrix::Identity(n, n);  // H^{k-1}
    for (int k = 1; k <= n; ++k) {
      const CMatrix next = pw * h;
      double target = 0.0;
      for (const auto& pt : p.points) target += std::pow(dir.dot(pt), k);
      out.r(row) = p.spectrum_weight * (next.trace().real() - target) / k;
      if (with_jacobian) {
        // d tr(H^k)/k = tr(H^{k-1} dH), dH = -i sum_a dir_a dT_a
        const RVector pair = trace_pairing(pw);
        for (int a = 0; a < 3; ++a) {
          out.j.block(row, a * d, 1, d) = p.spectrum_weight * dir(a) * pair.transpose();
        }
      }
      pw = next;
      ++row;
    }
  }
  return out;
}

}  // namespace

PoleModes pole_modes(const std::array<CMatrix, 3>& sigma) {
  const int n = static_cast<int>(sigma[0].rows());
  const int N = 3 * n * n;
  RMatrix op(N, N);
  for (int c = 0; c < N; ++c) {
    RVector e = RVector::Zero(N);
    e(c) = 1.0;
    const Mats v = mats_from(n, e.data());
    coords_into(pole_operator(sigma, v), op.col(c).data());
  }
  // The operator is the Hessian of phi at sigma, hence symmetric.
  op = 0.5 * (op + op.transpose());
  Eigen::SelfAdjointEigenSolver<RMatrix> es(op);
  const RVector& ev = es.eigenvalues();
  const RMatrix& vecs = es.eigenvectors();

  PoleModes modes;
  std::vector<Eigen::Index> unb;
  std::map<long, std::vector<Eigen::Index>> bounded;  // keyed by 2*exponent
  for (Eigen::Index i = 0; i < N; ++i) {
    // Eigenvalues are half-integers; snap them.
    const double lam = std::round(2.0 * ev(i)) / 2.0;
    if (lam > 0.25) {
      unb.push_back(i);
    } else {
      bounded[std::lround(-2.0 * lam)].push_back(i);
    }
  }
  // Order unbounded columns by eigenvalue (already ascending from the solver).
  modes.unbounded.resize(N, static_cast<Eigen::Index>(unb.size()));
  for (std::size_t c = 0; c < unb.size(); ++c) {
    modes.unbounded.col(static_cast<Eigen::Index>(c)) = vecs.col(unb[c]);
    modes.unbounded_eig.push_back(std::round(2.0 * ev(unb[c])) / 2.0);
  }
  for (const auto& [key, idx] : bounded) {
    RMatrix q(N, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) q.col(static_cast<Eigen::Index>(c)) = vecs.col(idx[c]);
    modes.bounded.push_back(q);
    modes.bounded_exp.push_back(0.5 * static_cast<double>(key));
  }
  return modes;
}

std::vector<Eigen::Vector3d> spectrum_directions(int n) {
  std::vector<Eigen::Vector3d> dirs = {Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                                       Eigen::Vector3d::UnitZ()};
  const int extra = (n + 1) * (n + 2) / 2 + 2;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < extra; ++k) {
    const double z = 1.0 - (2.0 * k + 1.0) / extra;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * (k + 0.5);
    dirs.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return dirs;
}

int Problem::left_rows() const {
  if (left == LeftBoundary::Fixed) return 2 * n * n;
  return static_cast<int>(modes.unbounded.cols());
}

int Problem::right_rows() const {
  return 3 * n * n + static_cast<int>(directions.size()) * n;
}

ResidualSummary evaluate(const Problem& p, const RVector& x) {
  const int N = p.block();
  const int M = p.nodes();
  std::vector<RVector> f(static_cast<std::size_t>(M));
#pragma omp parallel for schedule(static)
  for (int m = 0; m < M; ++m) {
    f[static_cast<std::size_t>(m)] =
        eval_f(p, p.t[static_cast<std::size_t>(m)], x.data() + static_cast<Eigen::Index>(m) * N);
  }
  ResidualSummary s;
  s.ode_norms.resize(M - 1);
  // Per-interval squares are summed serially so the cost is bit-reproducible
  // for any thread count.
  RVector sqs(M - 1);
#pragma omp parallel for schedule(static)
  for (int m = 0; m < M - 1; ++m) {
    const RVector r = interval_residual(p, x, m, f[static_cast<std::size_t>(m)],
                                        f[static_cast<std::size_t>(m + 1)]);
    sqs(m) = r.squaredNorm();
    const double h = p.t[static_cast<std::size_t>(m + 1)] - p.t[static_cast<std::size_t>(m)];
    s.ode_norms(m) = r.norm() / h;
  }
  double sq = 0.0;
  for (int m = 0; m < M - 1; ++m) sq += sqs(m);
  const BoundaryRows left = left_rows_impl(p, x, false);
  const BoundaryRows right = right_rows_impl(p, x, false);
  sq += left.r.squaredNorm() + right.r.squaredNorm();
  s.cost = 0.5 * sq;
  s.ode_max = M > 1 ? s.ode_norms.maxCoeff() : 0.0;
  s.boundary_max = 0.0;
  if (left.r.size()) s.boundary_max = left.r.cwiseAbs().maxCoeff();
  if (right.r.size()) s.boundary_max = std::max(s.boundary_max, right.r.cwiseAbs().maxCoeff());
  return s;
}

RVector residual_vector(const Problem& p, const RVector& x) {
  const int N = p.block();
  const int M = p.nodes();
  RVector r(p.rows());
  std::vector<RVector> f(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    f[static_cast<std::size_t>(m)] =
        eval_f(p, p.t[static_cast<std::size_t>(m)], x.data() + static_cast<Eigen::Index>(m) * N);
  }
  for (int m = 0; m < M - 1; ++m) {
    r.segment(static_cast<Eigen::Index>(m) * N, N) = interval_residual(
        p, x, m, f[static_cast<std::size_t>(m)], f[static_cast<std::size_t>(m + 1)]);
  }
  const BoundaryRows left = left_rows_impl(p, x, false);
  const BoundaryRows right = right_rows_impl(p, x, false);
  const Eigen::Index off = static_cast<Eigen::Index>(M - 1) * N;
  r.segment(off, left.r.size()) = left.r;
  r.tail(right.r.size()) = right.r;
  return r;
}

void assemble_parallel(const Problem& p, const RVector& x, System& sys) {
  const int N = p.block();
  const int M = p.nodes();
  std::vector<NodeEval> nodes(static_cast<std::size_t>(M));
#pragma omp parallel for schedule(static)
  for (int m = 0; m < M; ++m) {
    nodes[static_cast<std::size_t>(m)] =
        eval_node(p, p.t[static_cast<std::size_t>(m)], x.data() + static_cast<Eigen::Index>(m) * N);
  }
  std::vector<IntervalBlocks> iv(static_cast<std::size_t>(M - 1));
#pragma omp parallel for schedule(static)
  for (int m = 0; m < M - 1; ++m) {
    iv[static_cast<std::size_t>(m)] = interval_blocks(p, x, m, nodes[static_cast<std::size_t>(m)],
                                                      nodes[static_cast<std::size_t>(m + 1)]);
  }
  const BoundaryRows left = left_rows_impl(p, x, true);
  const BoundaryRows right = right_rows_impl(p, x, true);

  sys.diag.assign(static_cast<std::size_t>(M), RMatrix());
  sys.upper.assign(static_cast<std::size_t>(M - 1), RMatrix());
  sys.gradient.resize(p.unknowns());
#pragma omp parallel for schedule(static)
  for (int m = 0; m < M; ++m) {
    RMatrix dm = RMatrix::Zero(N, N);
    RVector gm = RVector::Zero(N);
    if (m < M - 1) {
      const auto& b = iv[static_cast<std::size_t>(m)];
      dm.noalias() += b.a.transpose() * b.a;
      gm.noalias() += b.a.transpose() * b.r;
      sys.upper[static_cast<std::size_t>(m)] = b.a.transpose() * b.b;
    }
    if (m > 0) {
      const auto& b = iv[static_cast<std::size_t>(m - 1)];
      dm.noalias() += b.b.transpose() * b.b;
      gm.noalias() += b.b.transpose() * b.r;
    }
    if (m == 0 && left.r.size()) {
      dm.noalias() += left.j.transpose() * left.j;
      gm.noalias() += left.j.transpose() * left.r;
    }
    if (m == M - 1) {
      dm.noalias() += right.j.transpose() * right.j;
      gm.noalias() += right.j.transpose() * right.r;
    }
    sys.diag[static_cast<std::size_t>(m)] = std::move(dm);
    sys.gradient.segment(static_cast<Eigen::Index>(m) * N, N) = gm;
  }

  double sq = 0.0;
  double ode_max = 0.0;
  for (int m = 0; m < M - 1; ++m) {
    const auto& r = iv[static_cast<std::size_t>(m)].r;
    sq += r.squaredNorm();
    const double h = p.t[static_cast<std::size_t>(m + 1)] - p.t[static_cast<std::size_t>(m)];
    ode_max = std::max(ode_max, r.norm() / h);
  }
  sq += left.r.squaredNorm() + right.r.squaredNorm();
  sys.cost = 0.5 * sq;
  sys.ode_max = ode_max;
  sys.boundary_max = 0.0;
  if (left.r.size()) sys.boundary_max = left.r.cwiseAbs().maxCoeff();
  if (right.r.size()) sys.boundary_max = std::max(sys.boundary_max, right.r.cwiseAbs().maxCoeff());
}

SparseLinearization linearize_reference(const Problem& p, const RVector& x) {
  const int N = p.block();
  const int M = p.nodes();
  std::vector<Eigen::Triplet<double>> trip;
  RVector r(p.rows());
  std::vector<NodeEval> nodes;
  nodes.reserve(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    nodes.push_back(
        eval_node(p, p.t[static_cast<std::size_t>(m)], x.data() + static_cast<Eigen::Index>(m) * N));
  }
  for (int m = 0; m < M - 1; ++m) {
    const IntervalBlocks b = interval_blocks(p, x, m, nodes[static_cast<std::size_t>(m)],
                                             nodes[static_cast<std::size_t>(m + 1)]);
    const int row0 = m * N;
    r.segment(row0, N) = b.r;
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        if (b.a(i, j) != 0.0) trip.emplace_back(row0 + i, m * N + j, b.a(i, j));
        if (b.b(i, j) != 0.0) trip.emplace_back(row0 + i, (m + 1) * N + j, b.b(i, j));
      }
    }
  }
  int row = (M - 1) * N;
  const BoundaryRows left = left_rows_impl(p, x, true);
  for (Eigen::Index i = 0; i < left.r.size(); ++i) {
    r(row + i) = left.r(i);
    for (int j = 0; j < N; ++j) {
      if (left.j(i, j) != 0.0) trip.emplace_back(row + static_cast<int>(i), j, left.j(i, j));
    }
  }
  row += static_cast<int>(left.r.size());
  const BoundaryRows right = right_rows_impl(p, x, true);
  for (Eigen::Index i = 0; i < right.r.size(); ++i) {
    r(row + i) = right.r(i);
    for (int j = 0; j < N; ++j) {
      if (right.j(i, j) != 0.0) {
        trip.emplace_back(row + static_cast<int>(i), (M - 1) * N + j, right.j(i, j));
      }
    }
  }
  SparseLinearization out;
  out.jacobian.resize(p.rows(), p.unknowns());
  out.jacobian.setFromTriplets(trip.begin(), trip.end());
  out.residual = std::move(r);
  return out;
}

void assemble_serial(const Problem& p, const RVector& x, System& sys) {
  const int N = p.block();
  const int M = p.nodes();
  const SparseLinearization lin = linearize_reference(p, x);
  const Eigen::SparseMatrix<double> jtj =
      Eigen::SparseMatrix<double>(lin.jacobian.transpose()) * lin.jacobian;
  const RMatrix dense_cols;  // unused; blocks are extracted below
  sys.diag.assign(static_cast<std::size_t>(M), RMatrix::Zero(N, N));
  sys.upper.assign(static_cast<std::size_t>(M - 1), RMatrix::Zero(N, N));
  for (int k = 0; k < jtj.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(jtj, k); it; ++it) {
      const int row = static_cast<int>(it.row());
      const int col = static_cast<int>(it.col());
      const int bm = row / N;
      const int bn = col / N;
      if (bm == bn) {
        sys.diag[static_cast<std::size_t>(bm)](row % N, col % N) = it.value();
      } else if (bn == bm + 1) {
        sys.upper[static_cast<std::size_t>(bm)](row % N, col % N) = it.value();
      }
    }
  }
  sys.gradient = lin.jacobian.transpose() * lin.residual;
  sys.cost = 0.5 * lin.residual.squaredNorm();
  double ode_max = 0.0;
  for (int m = 0; m < M - 1; ++m) {
    const double h = p.t[static_cast<std::size_t>(m + 1)] - p.t[static_cast<std::size_t>(m)];
    ode_max = std::max(ode_max, lin.residual.segment(static_cast<Eigen::Index>(m) * N, N).norm() / h);
  }
  sys.ode_max = ode_max;
  const Eigen::Index nb = lin.residual.size() - static_cast<Eigen::Index>(M - 1) * N;
  sys.boundary_max = nb > 0 ? lin.residual.tail(nb).cwiseAbs().maxCoeff() : 0.0;
}

RVector solve_block_tridiagonal(const std::vector<RMatrix>& diag,
                                const std::vector<RMatrix>& upper, const RVector& rhs) {
  const std::size_t M = diag.size();
  if (M == 0) return RVector();
  const Eigen::Index N = diag[0].rows();
  // Block Cholesky: S_0 = D_0, S_{m+1} = D_{m+1} - C_m^T S_m^{-1} C_m.
  std::vector<Eigen::LLT<RMatrix>> fac(M);
  std::vector<RMatrix> w(M > 0 ? M - 1 : 0);  // L_m^{-1} C_m
  RVector y(rhs.size());
  RMatrix s = diag[0];
  for (std::size_t m = 0; m < M; ++m) {
    fac[m].compute(s);
    if (fac[m].info() != Eigen::Success) {
      throw std::runtime_error("block tridiagonal solve: pivot block not positive definite");
    }
    RVector b = rhs.segment(static_cast<Eigen::Index>(m) * N, N);
    if (m > 0) b.noalias() -= w[m - 1].transpose() * y.segment(static_cast<Eigen::Index>(m - 1) * N, N);
    y.segment(static_cast<Eigen::Index>(m) * N, N) = fac[m].matrixL().solve(b);
    if (m + 1 < M) {
      w[m] = fac[m].matrixL().solve(upper[m]);
      s = diag[m + 1];
      s.noalias() -= w[m].transpose() * w[m];
    }
  }
  RVector z(rhs.size());
  for (std::size_t mm = M; mm-- > 0;) {
    RVector b = y.segment(static_cast<Eigen::Index>(mm) * N, N);
    if (mm + 1 < M) b.noalias() -= w[mm] * z.segment(static_cast<Eigen::Index>(mm + 1) * N, N);
    z.segment(static_cast<Eigen::Index>(mm) * N, N) = fac[mm].matrixU().solve(b);
  }
  return z;
}

namespace {

struct GridProfile {
  double eps, L, a, hmax, tfast;
  double t1;  // end of the geometric zone

  // Spacing density: h(t) = max(min(a t, hmax), hmax t / tfast).
  double s(double t) const {
    double acc = 0.0;
    double lo = eps;
    if (eps > 0.0 && lo < t1) {
      const double hi = std::min(t, t1);
      acc += std::log(hi / lo) / a;
      lo = hi;
    }
    if (t > lo && lo < tfast) {
      const double hi = std::min(t, tfast);
      acc += (hi - lo) / hmax;
      lo = hi;
    }
    if (t > lo) acc += (tfast / hmax) * std::log(t / lo);
    return acc;
  }
};

}  // namespace

std::vector<double> graded_grid(double eps, double L, double ratio_minus_one, double h_max,
                                double t_fast, int nodes) {
  if (!(eps >= 0.0 && L > eps)) throw PreconditionError("graded_grid: need 0 <= eps < L");
  if (!(ratio_minus_one > 0.0 && h_max > 0.0 && t_fast > 0.0)) {
    throw PreconditionError("graded_grid: spacing parameters must be positive");
  }
  GridProfile g{eps, L, ratio_minus_one, h_max, std::max(t_fast, h_max / ratio_minus_one),
                h_max / ratio_minus_one};
  if (eps >= g.t1) g.t1 = eps;
  const double total = g.s(L);
  int M = nodes > 0 ? nodes : static_cast<int>(std::ceil(total)) + 1;
  M = std::max(M, 16);
  std::vector<double> t(static_cast<std::size_t>(M));
  t.front() = eps;
  t.back() = L;
  for (int m = 1; m < M - 1; ++m) {
    const double target = total * m / (M - 1);
    double lo = t[static_cast<std::size_t>(m - 1)];
    double hi = L;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * L; ++it) {
      const double mid = 0.5 * (lo + hi);
      (g.s(mid) < target ? lo : hi) = mid;
    }
    t[static_cast<std::size_t>(m)] = 0.5 * (lo + hi);
  }
  return t;
}

}  // namespace nahmflow::collocation
