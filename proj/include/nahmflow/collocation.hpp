#pragma once

// Discretized Nahm boundary-value problem on a graded grid.
//
// Unknowns are the pole-subtracted parts V_i with T_i = sigma_i / t + V_i,
// stored node-major: x[m*N .. (m+1)*N) = (coords V_1, coords V_2, coords V_3),
// N = 3 n^2. In the T0 = 0 gauge V obeys
//
//   dV_i/dt = -([sigma_j, V_k] + [V_j, sigma_k]) / t - [V_j, V_k],
//
// discretized with Hermite-Simpson (Lobatto IIIA, order 4) collocation.
// Everything here works in normalized units (configuration centred, unit
// diameter).

#include <vector>

#include <Eigen/Sparse>

#include "nahmflow/lie.hpp"

namespace nahmflow::collocation {

/// Eigen-decomposition of the linearized operator at the pole,
/// L(V)_i = [sigma_j, V_k] + [V_j, sigma_k]. A mode with eigenvalue lambda
/// behaves like t^{-lambda} near t = 0.
struct PoleModes {
  RMatrix unbounded;                   // N x k orthonormal, lambda > 0
  std::vector<double> unbounded_eig;   // lambda per column
  std::vector<RMatrix> bounded;        // grouped by exponent
  std::vector<double> bounded_exp;     // exponent -lambda >= 0 per group
};

PoleModes pole_modes(const std::array<CMatrix, 3>& sigma);

enum class LeftBoundary {
  Pole,  // no unbounded modes at t = eps
  Fixed  // T2(0) + i T3(0) prescribed (no pole)
};

struct Problem {
  int n = 0;
  std::array<CMatrix, 3> sigma;
  bool has_pole = false;
  std::vector<double> t;

  LeftBoundary left = LeftBoundary::Pole;
  PoleModes modes;
  double pole_weight = 1.0;
  bool pole_correction = true;
  std::array<CMatrix, 2> fixed_target;  // T2(0), T3(0) for LeftBoundary::Fixed

  std::vector<Eigen::Vector3d> points;      // limit joint spectrum (normalized)
  std::vector<Eigen::Vector3d> directions;  // for spectrum power sums
  double commutator_weight = 1.0;
  double spectrum_weight = 1.0;

  int block() const { return 3 * n * n; }
  int nodes() const { return static_cast<int>(t.size()); }
  int unknowns() const { return block() * nodes(); }
  int left_rows() const;
  int right_rows() const;
  int rows() const { return block() * (nodes() - 1) + left_rows() + right_rows(); }
};

/// Deterministic spread of unit vectors: the three axes plus a Fibonacci
/// lattice, enough to pin the joint spectrum of n commuting matrices.
std::vector<Eigen::Vector3d> spectrum_directions(int n);

/// Normal equations of the linearized least-squares problem, block tridiagonal.
struct System {
  std::vector<RMatrix> diag;   // (J^T J)_{m,m}
  std::vector<RMatrix> upper;  // (J^T J)_{m,m+1}
  RVector gradient;            // J^T r
  double cost = 0.0;           // |r|^2 / 2
  double ode_max = 0.0;        // max_m |R_m| / h_m
  double boundary_max = 0.0;   // max |boundary row|
};

/// Residual summary without the Jacobian.
struct ResidualSummary {
  double cost = 0.0;
  double ode_max = 0.0;
  double boundary_max = 0.0;
  RVector ode_norms;  // per interval |R_m| / h_m
};

ResidualSummary evaluate(const Problem& p, const RVector& x);

/// OpenMP block assembly of J^T J and J^T r.
void assemble_parallel(const Problem& p, const RVector& x, System& sys);

/// Serial reference: builds the sparse Jacobian row by row.
struct SparseLinearization {
  Eigen::SparseMatrix<double> jacobian;
  RVector residual;
};
SparseLinearization linearize_reference(const Problem& p, const RVector& x);

/// Serial reference normal equations, formed from the sparse Jacobian.
void assemble_serial(const Problem& p, const RVector& x, System& sys);

/// Full residual vector (interval rows, then left rows, then right rows).
RVector residual_vector(const Problem& p, const RVector& x);

/// Solves (diag/upper block tridiagonal SPD) y = rhs by block Cholesky.
/// Throws std::runtime_error when a pivot block is not positive definite.
RVector solve_block_tridiagonal(const std::vector<RMatrix>& diag,
                                const std::vector<RMatrix>& upper, const RVector& rhs);

/// Graded grid on [eps, L]: spacing grows like `ratio_minus_one * t` near eps,
/// is capped at `h_max`, then grows again beyond `t_fast`. If `nodes` > 0 the
/// spacing profile is rescaled to hit exactly that count.
std::vector<double> graded_grid(double eps, double L, double ratio_minus_one, double h_max,
                                double t_fast, int nodes = 0);

}  // namespace nahmflow::collocation
