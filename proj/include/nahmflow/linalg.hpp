#pragma once

#include <vector>

#include "nahmflow/lie.hpp"

namespace nahmflow {

// Real coordinates on u(n). The basis
//   i E_aa,  (E_ab - E_ba)/sqrt2,  i (E_ab + E_ba)/sqrt2   (a < b)
// is orthonormal for <A,B> = -tr(AB), so Euclidean norms of coordinate
// vectors are Frobenius norms.
int u_dim(int n);
CMatrix u_basis(int n, int index);
void u_coords(const CMatrix& a, double* out);
RVector u_coords(const CMatrix& a);
CMatrix u_from_coords(int n, const double* c);
CMatrix u_from_coords(int n, const RVector& c);

/// Matrix of X -> [A, X] restricted to u(n), in the basis above.
/// Requires A anti-hermitian (so the image stays in u(n)).
RMatrix ad_matrix(const CMatrix& a);

/// Orthonormal basis of ker(M) via SVD; singular values below
/// tol * max(1, sigma_max) count as zero.
RMatrix null_space(const RMatrix& m, double tol = 1e-10);
CMatrix null_space(const CMatrix& m, double tol = 1e-10);

/// Numerical rank with the same relative threshold.
int numerical_rank(const RMatrix& m, double tol = 1e-10);
int numerical_rank(const CMatrix& m, double tol = 1e-10);

/// Coefficients c_1..c_n of det(zI - A) = z^n + c_1 z^{n-1} + ... + c_n,
/// by the Faddeev-LeVerrier recursion.
CVector charpoly(const CMatrix& a);

/// Same, plus the adjugate coefficients B_0..B_{n-1} so that
/// d c_k / dA [E] = -tr(B_{k-1} E).
CVector charpoly(const CMatrix& a, std::vector<CMatrix>& adj_coeffs);

/// Coefficients of prod_k (z - roots_k), leading 1 omitted.
CVector poly_from_roots(const CVector& roots);

/// Companion matrix of z^n + c_1 z^{n-1} + ... + c_n.
CMatrix companion(const CVector& coeffs);

/// Basis (columns) of the common centralizer {A in u(n): [A, T_i] = 0}.
RMatrix common_centralizer(const std::vector<CMatrix>& mats, double tol = 1e-10);

}  // namespace nahmflow
