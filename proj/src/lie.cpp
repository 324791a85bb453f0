#include "nahmflow/lie.hpp"

#include <random>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace nahmflow {

void require_same_dim(int a, int b, const char* where) {
  if (a != b) {
    std::ostringstream os;
    os << where << ": dimension mismatch (" << a << " vs " << b << ")";
    throw DimensionError(os.str());
  }
}

namespace {

void require_square(const CMatrix& m, const char* where) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(where) + ": matrix is not square");
  }
}

}  // namespace

AntiHermitian::AntiHermitian(const CMatrix& m) {
  require_square(m, "AntiHermitian");
  m_ = 0.5 * (m - m.adjoint());
}

AntiHermitian AntiHermitian::zero(int n) { return AntiHermitian(CMatrix::Zero(n, n)); }

AntiHermitian AntiHermitian::operator+(const AntiHermitian& o) const {
  require_same_dim(dim(), o.dim(), "AntiHermitian::operator+");
  return AntiHermitian(m_ + o.m_);
}

AntiHermitian AntiHermitian::operator-(const AntiHermitian& o) const {
  require_same_dim(dim(), o.dim(), "AntiHermitian::operator-");
  return AntiHermitian(m_ - o.m_);
}

AntiHermitian AntiHermitian::operator*(double s) const { return AntiHermitian(m_ * s); }

Triple::Triple(AntiHermitian t1, AntiHermitian t2, AntiHermitian t3)
    : t_{std::move(t1), std::move(t2), std::move(t3)} {
  require_same_dim(t_[0].dim(), t_[1].dim(), "Triple");
  require_same_dim(t_[0].dim(), t_[2].dim(), "Triple");
}

Triple Triple::zero(int n) {
  return {AntiHermitian::zero(n), AntiHermitian::zero(n), AntiHermitian::zero(n)};
}

Triple Triple::operator+(const Triple& o) const {
  return {t_[0] + o[0], t_[1] + o[1], t_[2] + o[2]};
}

Triple Triple::operator-(const Triple& o) const {
  return {t_[0] - o[0], t_[1] - o[1], t_[2] - o[2]};
}

Triple Triple::operator*(double s) const { return {t_[0] * s, t_[1] * s, t_[2] * s}; }

ComplexPair to_complex_pair(const Triple& t) {
  const cplx i(0.0, 1.0);
  return {i * t[0].matrix(), t[1].matrix() + i * t[2].matrix()};
}

double inner(const AntiHermitian& a, const AntiHermitian& b) {
  require_same_dim(a.dim(), b.dim(), "inner");
  // -tr(AB) = sum_ij conj(A_ij) B_ij for anti-hermitian A.
  return -(a.matrix().cwiseProduct(b.matrix().transpose())).sum().real();
}

double inner(const Triple& a, const Triple& b) {
  return inner(a[0], b[0]) + inner(a[1], b[1]) + inner(a[2], b[2]);
}

CMatrix commutator(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("commutator: dimension mismatch");
  }
  return a * b - b * a;
}

AntiHermitian commutator(const AntiHermitian& a, const AntiHermitian& b) {
  return AntiHermitian(commutator(a.matrix(), b.matrix()));
}

double phi(const Triple& t) { return inner(t[0], commutator(t[1], t[2])); }

Triple grad_phi(const Triple& t) {
  return {commutator(t[1], t[2]), commutator(t[2], t[0]), commutator(t[0], t[1])};
}

Triple nahm_residual(const AntiHermitian& t0, const Triple& t, const Triple& tdot) {
  require_same_dim(t0.dim(), t.dim(), "nahm_residual");
  require_same_dim(t.dim(), tdot.dim(), "nahm_residual");
  std::array<AntiHermitian, 3> r;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const int k = (i + 2) % 3;
    r[static_cast<std::size_t>(i)] =
        AntiHermitian(tdot[i].matrix() + commutator(t0.matrix(), t[i].matrix()) +
                      commutator(t[j].matrix(), t[k].matrix()));
  }
  return {r[0], r[1], r[2]};
}

CMatrix expm(const CMatrix& a) {
  require_square(a, "expm");
  return a.exp();
}

double unitarity_defect(const CMatrix& g) {
  return (g.adjoint() * g - CMatrix::Identity(g.rows(), g.cols())).norm();
}

bool is_unitary(const CMatrix& g, double tol) {
  return g.rows() == g.cols() && unitarity_defect(g) <= tol;
}

CMatrix adjoint(const CMatrix& g, const CMatrix& a, double unitary_tol) {
  require_square(g, "adjoint");
  if (g.rows() != a.rows() || a.rows() != a.cols()) {
    throw DimensionError("adjoint: dimension mismatch");
  }
  if (!is_unitary(g, unitary_tol)) {
    throw PreconditionError("adjoint: g is not unitary");
  }
  return g * a * g.adjoint();
}

AntiHermitian adjoint(const CMatrix& g, const AntiHermitian& a, double unitary_tol) {
  return AntiHermitian(adjoint(g, a.matrix(), unitary_tol));
}

Triple adjoint(const CMatrix& g, const Triple& t, double unitary_tol) {
  return {adjoint(g, t[0], unitary_tol), adjoint(g, t[1], unitary_tol),
          adjoint(g, t[2], unitary_tol)};
}

AntiHermitian random_antihermitian(int n, std::uint64_t seed) {
  if (n < 1) throw PreconditionError("random_antihermitian: n must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix m(n, n);
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      m(r, c) = cplx(re, im);
    }
  }
  return AntiHermitian(m);
}

Triple random_triple(int n, std::uint64_t seed) {
  std::seed_seq seq{seed, seed >> 32, std::uint64_t{0x9e3779b97f4a7c15ULL}};
  std::array<std::uint32_t, 3> s{};
  seq.generate(s.begin(), s.end());
  return {random_antihermitian(n, s[0]), random_antihermitian(n, s[1]),
          random_antihermitian(n, s[2])};
}

CMatrix random_unitary(int n, std::uint64_t seed) {
  CMatrix u = expm(random_antihermitian(n, seed).matrix() * 2.0);
  // Re-orthonormalize to push the defect to machine precision.
  Eigen::HouseholderQR<CMatrix> qr(u);
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
  CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < n; ++k) {
    const cplx d = r(k, k);
    if (std::abs(d) > 0.0) q.col(k) *= d / std::abs(d);
  }
  return q;
}

}  // namespace nahmflow
