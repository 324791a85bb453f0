#pragma once

#include <vector>

#include "nahmflow/solver.hpp"

namespace nahmflow {

/// A point of U(n)/T^n: column k of `frame` spans the line of point labels[k]
/// (1-based). Columns are phase-canonical: the entry of largest modulus is real
/// and positive, lowest row first on ties.
struct Flag {
  CMatrix frame;
  std::vector<int> labels;
  double projection_distance = 0.0;  // limit_triple cleanup, relative to scale
  SolverDiagnostics diagnostics;      // of the solve that produced it, if any
};

struct LimitTriple {
  Triple limit;     // exactly commuting
  double distance;  // max_a |T_a(L) - limit_a| / scale
};

/// Nearest commuting triple to T(L): joint eigenbasis of a fixed generic
/// combination, then off-diagonal parts dropped. Throws PreconditionError if
/// the cleanup moved the triple by more than cfg.commute_tol.
LimitTriple limit_triple(const NahmSolution& s);

/// Joint eigenlines of a commuting triple, labelled by the configuration point
/// their eigenvalue triple (v^H T_a v / i) lands on, within separation / 3.
Flag flag_from_limit(const Triple& lim, const Configuration& c);

/// Regular-pole solve, limit, flag.
Flag berry_robbins_map(const Configuration& c, const SolverConfig& cfg);

/// max_k sin(angle between the lines F_k and G_k), in [0, 1].
double flag_distance(const Flag& f, const Flag& g);

/// Columns rotated by a unitary, then re-canonicalized.
Flag act(const CMatrix& g, const Flag& f);

/// Puts each column in canonical phase.
void canonicalize_phases(CMatrix& frame);

/// Distance between map(perm . c) with columns relabelled back and map(c).
/// perm is 0-based: point k of the permuted configuration is point perm[k].
double check_permutation_equivariance(const Configuration& c, const std::vector<int>& perm,
                                      const SolverConfig& cfg);

/// Distance between map(R(A) c) and rho_n(A) map(c) for A in SU(2).
double check_so3_equivariance(const Configuration& c, const CMatrix& a, const SolverConfig& cfg);

}  // namespace nahmflow
