#pragma once

#include <cstdint>
#include <vector>

#include "nahmflow/configuration.hpp"
#include "nahmflow/su2.hpp"

namespace nahmflow {

/// S(rho) = Y + Z(X) inside gl(n, C).
struct SlodowySlice {
  Partition partition;
  SL2Data sl2;
  std::vector<CMatrix> zx_basis;  // Frobenius-orthonormal basis of Z(X)
  int dim = 0;
};

struct SlicePoint {
  CVector coords;  // over zx_basis
  CMatrix matrix;  // Y + sum coords_j Z_j
};

/// Orthonormal basis of {Z : [X, Z] = 0} in gl(n, C).
std::vector<CMatrix> centralizer_in_gl(const CMatrix& x, double tol = 1e-10);

/// dim Z(X) for the nilpotent of type p: sum of squared conjugate parts,
/// equivalently sum_i (2i - 1) p_i.
int centralizer_dim_formula(const Partition& p);

SlodowySlice slodowy_slice(const Partition& rho);

SlicePoint slice_point(const SlodowySlice& s, const CVector& coords);

struct TransversalityReport {
  int rank = 0;        // of im(ad Y) + Z(X)
  int expected = 0;    // n^2
  int deficiency = 0;  // expected - rank
  bool ok() const { return deficiency == 0; }
};

/// Checks im(ad Y) + Z(X) = gl(n) by a numerical rank of the stacked spans.
TransversalityReport transversality_check(const SlodowySlice& s, double tol = 1e-10);

/// Coefficients c_1..c_n of det(z - M).
CVector chi_map(const SlicePoint& p);
CVector chi_map(const CMatrix& m);

struct SliceIntersection {
  std::vector<SlicePoint> points;   // distinct solutions
  std::vector<int> jacobian_ranks;  // complex rank of d chi at each point
  std::vector<int> local_dims;      // slice dim - rank
  int expected_local_dim = 0;       // dim Z(X) - n
  int starts = 0;
  int converged_starts = 0;
  double max_residual = 0.0;        // scaled char-poly mismatch at the points
};

/// Solves chi(p) = chi(diag(y_k + i z_k)) on S(rho) from seeded starts: Newton
/// when the slice has dimension n, minimum-norm Gauss-Newton otherwise.
/// Throws PreconditionError if the values y_k + i z_k are not distinct, and
/// std::runtime_error if no start converges.
SliceIntersection orbit_slice_intersection(const Configuration& c, const Partition& rho,
                                           std::uint64_t seed, int starts = 8);

}  // namespace nahmflow
