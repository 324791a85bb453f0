#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nahmflow {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Raised when operands of a matrix operation have incompatible sizes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an input violates an operation's precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An element of u(n). Construction skew-hermitizes the input, A <- (A - A^H)/2,
/// so the invariant A^H = -A holds exactly.
class AntiHermitian {
 public:
  AntiHermitian() = default;
  explicit AntiHermitian(const CMatrix& m);

  static AntiHermitian zero(int n);

  const CMatrix& matrix() const noexcept { return m_; }
  int dim() const noexcept { return static_cast<int>(m_.rows()); }

  AntiHermitian operator+(const AntiHermitian& o) const;
  AntiHermitian operator-(const AntiHermitian& o) const;
  AntiHermitian operator*(double s) const;

 private:
  CMatrix m_;
};

/// Three elements of u(n) of a common dimension: (T1, T2, T3).
class Triple {
 public:
  Triple() = default;
  Triple(AntiHermitian t1, AntiHermitian t2, AntiHermitian t3);

  static Triple zero(int n);

  const AntiHermitian& operator[](int i) const { return t_[static_cast<std::size_t>(i)]; }
  int dim() const noexcept { return t_[0].dim(); }

  Triple operator+(const Triple& o) const;
  Triple operator-(const Triple& o) const;
  Triple operator*(double s) const;

 private:
  std::array<AntiHermitian, 3> t_;
};

/// Holomorphic pair alpha = T0 + i T1, beta = T2 + i T3.
struct ComplexPair {
  CMatrix alpha;
  CMatrix beta;
};

/// alpha = i*T1, beta = T2 + i*T3 in the T0 = 0 gauge.
ComplexPair to_complex_pair(const Triple& t);

/// <A, B> = -tr(AB).
double inner(const AntiHermitian& a, const AntiHermitian& b);
double inner(const Triple& a, const Triple& b);

CMatrix commutator(const CMatrix& a, const CMatrix& b);
AntiHermitian commutator(const AntiHermitian& a, const AntiHermitian& b);

/// phi(T) = <T1, [T2, T3]>.
double phi(const Triple& t);

/// ([T2,T3], [T3,T1], [T1,T2]).
Triple grad_phi(const Triple& t);

/// Component i is dT_i/dt + [T0, T_i] + [T_j, T_k] for cyclic (i, j, k).
Triple nahm_residual(const AntiHermitian& t0, const Triple& t, const Triple& tdot);

/// Matrix exponential (Pade scaling and squaring).
CMatrix expm(const CMatrix& a);

/// Ad(g) a = g a g^{-1}; g must be unitary to within `unitary_tol`.
CMatrix adjoint(const CMatrix& g, const CMatrix& a, double unitary_tol = 1e-10);
AntiHermitian adjoint(const CMatrix& g, const AntiHermitian& a, double unitary_tol = 1e-10);
Triple adjoint(const CMatrix& g, const Triple& t, double unitary_tol = 1e-10);

/// Gaussian entries with unit variance before skew-hermitization.
AntiHermitian random_antihermitian(int n, std::uint64_t seed);
Triple random_triple(int n, std::uint64_t seed);
/// expm of a random anti-hermitian; Haar-like enough for equivariance checks.
CMatrix random_unitary(int n, std::uint64_t seed);

double unitarity_defect(const CMatrix& g);
bool is_unitary(const CMatrix& g, double tol = 1e-10);

void require_same_dim(int a, int b, const char* where);

}  // namespace nahmflow
