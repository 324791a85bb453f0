#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "nahmflow/configuration.hpp"
#include "nahmflow/su2.hpp"

namespace nahmflow {

/// Numerical settings. The truncations and the node count default to zero,
/// meaning "choose from the configuration" (see resolve()). Lengths are in the
/// configuration's units.
struct SolverConfig {
  double eps = 0.0;
  double L = 0.0;
  int grid_size = 0;
  double grading = 0.04;   // neighbouring spacings differ by this ratio near eps
  double h_max = 0.1;      // spacing cap, in units of 1/diameter
  double t_fast = 30.0;    // beyond this (same units) spacing grows again
  double newton_tol = 1e-9;     // per-node collocation residual (normalized units)
  double boundary_tol = 1e-7;   // boundary rows (normalized units)
  double residual_tol = 1e-6;   // verify_solution threshold, relative to scale^2
  double commute_tol = 1e-6;    // relative to scale^2
  double residue_factor = 2.0;  // verify: |eps T(eps) - sigma| <= factor * eps * scale
  int max_iter = 80;
  double damping = 1e-4;   // initial Levenberg-Marquardt parameter
  double pole_weight = 1.0;
  double commutator_weight = 1.0;
  double spectrum_weight = 1.0;
  int starts = 4;          // alignment starts for the initial guess
  std::uint64_t seed = 1;

  /// Fills automatic fields for this configuration. Throws PreconditionError on
  /// inconsistent values (eps >= L, grid_size < 16, non-positive tolerances).
  SolverConfig resolve(const Configuration& c, bool has_pole = true) const;
};

struct SolverDiagnostics {
  std::vector<double> residual_nodes;  // per interval, relative to scale^2
  double residual_max = 0.0;
  double boundary_max = 0.0;
  double commutator_L = 0.0;           // max_ij |[T_i(L), T_j(L)]| / scale^2
  double residue_eps = 0.0;            // max_i |eps T_i(eps) - sigma_i|
  double eta = std::numeric_limits<double>::infinity();  // tail rate; inf if constant
  int iterations = 0;
  bool converged = false;
};

/// Trajectory in the T0 = 0 gauge, T_i(t) = sigma_i / t + V_i(t) on `grid`.
struct NahmSolution {
  std::vector<double> grid;
  std::vector<Triple> V;
  SU2Triple sigma;
  Triple tau;
  Configuration config;
  SolverConfig cfg;  // resolved
  SolverDiagnostics diagnostics;

  int n() const { return tau.dim(); }
  Triple T(std::size_t m) const;
  double scale() const { return config.diameter(); }
};

/// Raised when the least-squares iteration stalls before meeting the tolerances.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// Exact n = 2 solution with limit (d sigma_1, 0, 0):
/// T_1 = d coth(dt) sigma_1, T_2 = d csch(dt) sigma_2, T_3 = d csch(dt) sigma_3.
Triple su2_closed_form(double d, double t);

/// Closed form sampled on the given grid as a solution object (for the
/// points (+d/2, 0, 0), (-d/2, 0, 0)); diagnostics are filled by verify_solution.
NahmSolution closed_form_solution(double d, const std::vector<double>& grid,
                                  const SolverConfig& cfg = {});

/// Half-line problem: pole of type rho at 0, limit conjugate to config_to_tau(c).
NahmSolution solve_bvp(const Partition& rho, const Configuration& c, const SolverConfig& cfg);

/// rho = 0 problem with T_2(0) + i T_3(0) = i beta0, where beta0 has spectrum
/// y_k + i z_k (after optimal matching, within 1e-8 relative).
NahmSolution solve_rho_zero(const Configuration& c, const CMatrix& beta0,
                            const SolverConfig& cfg);

/// Characteristic-polynomial coefficients of -i beta(t) = T_3 - i T_2 per node.
/// Its limit is diag(y_k + i z_k); the Lax form keeps them constant.
std::vector<CVector> spectral_invariants(const NahmSolution& s);

/// Largest coefficient drift across nodes, and deviation from the
/// configuration's polynomial; coefficient k is compared relative to scale^k.
struct SpectralDrift {
  double drift = 0.0;
  double mismatch = 0.0;
};
SpectralDrift spectral_drift(const NahmSolution& s);

struct VerificationReport {
  SolverDiagnostics diagnostics;
  double limit_centralizer_dim = 0;  // brute-force kernel of the limit triple
  bool residual_ok = false;
  bool residue_ok = false;
  bool commutator_ok = false;
  bool eta_ok = false;
  bool regular_limit_ok = false;
  bool passed() const {
    return residual_ok && residue_ok && commutator_ok && eta_ok && regular_limit_ok;
  }
};

/// Recomputes every diagnostic from the stored trajectory.
VerificationReport verify_solution(const NahmSolution& s);

}  // namespace nahmflow
