#include "nahmflow/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "nahmflow/collocation.hpp"
#include "nahmflow/linalg.hpp"

namespace nahmflow {

namespace col = collocation;

SolverConfig SolverConfig::resolve(const Configuration& c, bool has_pole) const {
  SolverConfig r = *this;
  const double D = c.diameter();
  const double sep = c.separation() / D;
  if (!(grading > 0.0 && h_max > 0.0 && t_fast > 0.0)) {
    throw PreconditionError("solver config: grading, h_max and t_fast must be positive");
  }
  if (!(newton_tol > 0.0 && boundary_tol > 0.0 && residual_tol > 0.0 && commute_tol > 0.0)) {
    throw PreconditionError("solver config: tolerances must be positive");
  }
  if (max_iter < 1) throw PreconditionError("solver config: max_iter must be >= 1");
  if (starts < 1) throw PreconditionError("solver config: starts must be >= 1");
  if (!has_pole) {
    r.eps = 0.0;
  } else if (r.eps == 0.0) {
    r.eps = 0.04 / D;
  }
  if (r.eps < 0.0) throw PreconditionError("solver config: eps must be positive");
  if (r.L == 0.0) r.L = std::max(16.0, 24.0 / sep) / D;
  if (!(r.L > r.eps)) throw PreconditionError("solver config: need eps < L");
  if (r.grid_size != 0 && r.grid_size < 16) {
    throw PreconditionError("solver config: grid_size must be >= 16");
  }
  if (r.grid_size == 0) {
    r.grid_size = static_cast<int>(
        col::graded_grid(r.eps * D, r.L * D, grading, h_max, t_fast).size());
  }
  return r;
}

Triple NahmSolution::T(std::size_t m) const {
  const Triple& v = V.at(m);
  if (sigma.partition.is_zero()) return v;
  return v + sigma.sigma * (1.0 / grid.at(m));
}

Triple su2_closed_form(double d, double t) {
  if (!(t > 0.0)) throw PreconditionError("su2_closed_form: t must be positive");
  if (!(d > 0.0)) throw PreconditionError("su2_closed_form: d must be positive");
  const SU2Triple s = irreducible_triple(2);
  const double x = d * t;
  const double coth = 1.0 / std::tanh(x);
  const double csch = 1.0 / std::sinh(x);
  return Triple(s.sigma[0] * (d * coth), s.sigma[1] * (d * csch), s.sigma[2] * (d * csch));
}

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

using Mats = std::array<CMatrix, 3>;

Mats mats_of(const Triple& t) { return {t[0].matrix(), t[1].matrix(), t[2].matrix()}; }

Triple triple_of(const Mats& m) {
  return Triple(AntiHermitian(m[0]), AntiHermitian(m[1]), AntiHermitian(m[2]));
}

// Configuration centred at its centroid with unit diameter.
struct Normalization {
  Eigen::Vector3d centre;
  double D = 1.0;
  std::vector<Eigen::Vector3d> points;  // normalized
};

Normalization normalize(const Configuration& c) {
  Normalization nz;
  nz.centre = c.centroid();
  nz.D = c.diameter();
  for (const auto& p : c.points()) nz.points.push_back((p - nz.centre) / nz.D);
  return nz;
}

Mats normalized_tau(const Normalization& nz) {
  const int n = static_cast<int>(nz.points.size());
  Mats t;
  for (int a = 0; a < 3; ++a) {
    t[static_cast<std::size_t>(a)] = CMatrix::Zero(n, n);
    for (int k = 0; k < n; ++k) {
      t[static_cast<std::size_t>(a)](k, k) = cplx(0.0, nz.points[static_cast<std::size_t>(k)](a));
    }
  }
  return t;
}

col::Problem build_problem(const SU2Triple& sigma, const Normalization& nz,
                           const SolverConfig& cfg, std::vector<double> grid_hat) {
  col::Problem p;
  p.n = sigma.sigma.dim();
  p.sigma = mats_of(sigma.sigma);
  p.has_pole = !sigma.partition.is_zero();
  p.t = std::move(grid_hat);
  p.left = col::LeftBoundary::Pole;
  p.modes = col::pole_modes(p.sigma);
  p.pole_weight = cfg.pole_weight;
  p.points = nz.points;
  p.directions = col::spectrum_directions(p.n);
  p.commutator_weight = cfg.commutator_weight;
  p.spectrum_weight = cfg.spectrum_weight;
  return p;
}

std::vector<double> normalized_grid(const SolverConfig& r, double D) {
  return col::graded_grid(r.eps * D, r.L * D, r.grading, r.h_max, r.t_fast, r.grid_size);
}

struct LMResult {
  int iterations = 0;
  bool converged = false;
  double ode_max = 0.0;
  double boundary_max = 0.0;
};

bool meets(const SolverConfig& cfg, double ode, double bnd) {
  return ode <= cfg.newton_tol && bnd <= cfg.boundary_tol;
}

// Levenberg-Marquardt on the block-tridiagonal normal equations.
LMResult levenberg_marquardt(const col::Problem& p, RVector& x, const SolverConfig& cfg) {
  const int N = p.block();
  const int M = p.nodes();
  col::System sys;
  col::assemble_parallel(p, x, sys);
  LMResult res;
  double lambda = cfg.damping;
  double nu = 2.0;
  bool stalled = false;
  for (int it = 0; it < cfg.max_iter; ++it) {
    res.iterations = it;
    if (meets(cfg, sys.ode_max, sys.boundary_max)) {
      res.converged = true;
      break;
    }
    // Marquardt scaling, floored so that directions with tiny curvature still move.
    double mean_diag = 0.0;
    for (const auto& d : sys.diag) mean_diag += d.diagonal().sum();
    mean_diag /= static_cast<double>(p.unknowns());
    const double floor = 1e-8 * std::max(mean_diag, 1e-300);
    RVector scale(p.unknowns());
    std::vector<RMatrix> damped = sys.diag;
    for (int m = 0; m < M; ++m) {
      for (int i = 0; i < N; ++i) {
        const double s = std::max(sys.diag[static_cast<std::size_t>(m)](i, i), floor);
        scale(m * N + i) = s;
        damped[static_cast<std::size_t>(m)](i, i) += lambda * s;
      }
    }
    RVector dx;
    try {
      dx = col::solve_block_tridiagonal(damped, sys.upper, -sys.gradient);
    } catch (const std::runtime_error&) {
      lambda *= 10.0;
      continue;
    }
    const double predicted =
        0.5 * (-sys.gradient.dot(dx) + lambda * dx.cwiseProduct(scale).dot(dx));
    const RVector trial = x + dx;
    const col::ResidualSummary s = col::evaluate(p, trial);
    const double actual = sys.cost - s.cost;
    const double rho = predicted > 0.0 ? actual / predicted : -1.0;
    if (std::isfinite(s.cost) && rho > 1e-4) {
      x = trial;
      col::assemble_parallel(p, x, sys);
      lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
      lambda = std::max(lambda, 1e-15);
      nu = 2.0;
      if (dx.norm() <= 1e-10 * (1.0 + x.norm())) stalled = true;
    } else {
      lambda *= nu;
      nu *= 2.0;
      if (lambda > 1e16 || dx.norm() <= 1e-12 * (1.0 + x.norm())) stalled = true;
    }
    res.iterations = it + 1;
    if (stalled) break;
  }
  // The discrete problem is overdetermined, so its least-squares minimum can sit
  // slightly above newton_tol; a stationary point within residual_tol is accepted.
  res.converged = meets(cfg, sys.ode_max, sys.boundary_max) ||
                  (stalled && sys.ode_max <= cfg.residual_tol &&
                   sys.boundary_max <= cfg.residual_tol);
  res.ode_max = sys.ode_max;
  res.boundary_max = sys.boundary_max;
  return res;
}

double alignment_score(const CMatrix& g, const Mats& tau, const Mats& sigma) {
  double s = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    s += -(g * tau[a] * g.adjoint() * sigma[a]).trace().real();
  }
  return s;
}

// Riemannian gradient ascent of sum_a <Ad(g) tau_a, sigma_a> over U(n).
CMatrix align(CMatrix g, const Mats& tau, const Mats& sigma) {
  double score = alignment_score(g, tau, sigma);
  double step = 0.5;
  for (int it = 0; it < 2000; ++it) {
    CMatrix omega = CMatrix::Zero(g.rows(), g.cols());
    for (std::size_t a = 0; a < 3; ++a) {
      omega += commutator(CMatrix(g * tau[a] * g.adjoint()), sigma[a]);
    }
    omega = 0.5 * (omega - omega.adjoint());
    if (omega.norm() < 1e-13) break;
    bool moved = false;
    while (step > 1e-12) {
      const CMatrix trial = expm(step * omega) * g;
      const double ts = alignment_score(trial, tau, sigma);
      if (ts > score) {
        g = trial;
        score = ts;
        step *= 1.5;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return g;
}

RVector initial_guess(const col::Problem& p, const Mats& tau_aligned) {
  const int N = p.block();
  const int d = p.n * p.n;
  RVector x(p.unknowns());
  for (int m = 0; m < p.nodes(); ++m) {
    const double t = p.t[static_cast<std::size_t>(m)];
    const double w = p.has_pole ? std::exp(-t * t) : 0.0;
    for (int a = 0; a < 3; ++a) {
      CMatrix v = (1.0 - w) * tau_aligned[static_cast<std::size_t>(a)];
      if (p.has_pole) v -= (1.0 - w) / t * p.sigma[static_cast<std::size_t>(a)];
      u_coords(v, x.data() + m * N + a * d);
    }
  }
  return x;
}

NahmSolution assemble_solution(const col::Problem& p, const RVector& x, const SU2Triple& sigma,
                               const Configuration& c, const Normalization& nz,
                               const SolverConfig& r) {
  const int n = p.n;
  const int d = n * n;
  const int N = p.block();
  NahmSolution s;
  s.sigma = sigma;
  s.tau = config_to_tau(c);
  s.config = c;
  s.cfg = r;
  const cplx i(0.0, 1.0);
  for (int m = 0; m < p.nodes(); ++m) {
    s.grid.push_back(p.t[static_cast<std::size_t>(m)] / nz.D);
    Mats v;
    for (int a = 0; a < 3; ++a) {
      v[static_cast<std::size_t>(a)] =
          nz.D * u_from_coords(n, x.data() + m * N + a * d) +
          i * nz.centre(a) * CMatrix::Identity(n, n);
    }
    s.V.push_back(triple_of(v));
  }
  return s;
}

void fill_diagnostics(NahmSolution& s, int iterations, bool converged) {
  const VerificationReport rep = verify_solution(s);
  s.diagnostics = rep.diagnostics;
  s.diagnostics.iterations = iterations;
  s.diagnostics.converged = converged;
}

}  // namespace

NahmSolution closed_form_solution(double d, const std::vector<double>& grid,
                                  const SolverConfig& cfg) {
  if (grid.size() < 2) throw PreconditionError("closed_form_solution: grid too short");
  const Configuration c({Eigen::Vector3d(d / 2, 0, 0), Eigen::Vector3d(-d / 2, 0, 0)});
  SolverConfig r = cfg;
  r.eps = grid.front();
  r.L = grid.back();
  r.grid_size = static_cast<int>(grid.size());
  NahmSolution s;
  s.sigma = irreducible_triple(2);
  s.tau = config_to_tau(c);
  s.config = c;
  s.cfg = r.resolve(c);
  s.grid = grid;
  for (double t : grid) s.V.push_back(su2_closed_form(d, t) - s.sigma.sigma * (1.0 / t));
  fill_diagnostics(s, 0, true);
  return s;
}

NahmSolution solve_bvp(const Partition& rho, const Configuration& c, const SolverConfig& cfg) {
  if (rho.n() != c.n()) {
    throw DimensionError("solve_bvp: partition of " + std::to_string(rho.n()) +
                         " does not match " + std::to_string(c.n()) + " points");
  }
  const SU2Triple sigma = rep_from_partition(rho);
  const bool has_pole = !rho.is_zero();
  const SolverConfig r = cfg.resolve(c, has_pole);
  const Normalization nz = normalize(c);
  const col::Problem p = build_problem(sigma, nz, r, normalized_grid(r, nz.D));
  const Mats tau = normalized_tau(nz);

  // Candidate alignments, best score first.
  std::vector<std::pair<double, CMatrix>> cands;
  if (!has_pole) {
    cands.emplace_back(0.0, CMatrix::Identity(p.n, p.n));
  } else {
    for (int k = 0; k < r.starts; ++k) {
      const CMatrix g0 = k == 0 ? CMatrix(CMatrix::Identity(p.n, p.n))
                                : random_unitary(p.n, r.seed * 7919ULL + static_cast<std::uint64_t>(k));
      const CMatrix g = align(g0, tau, p.sigma);
      cands.emplace_back(alignment_score(g, tau, p.sigma), g);
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
  }

  double best = std::numeric_limits<double>::infinity();
  int total_iter = 0;
  for (const auto& cand : cands) {
    Mats aligned;
    for (std::size_t a = 0; a < 3; ++a) aligned[a] = cand.second * tau[a] * cand.second.adjoint();
    RVector x = initial_guess(p, aligned);
    const LMResult lm = levenberg_marquardt(p, x, r);
    total_iter += lm.iterations;
    if (lm.converged) {
      NahmSolution s = assemble_solution(p, x, sigma, c, nz, r);
      fill_diagnostics(s, total_iter, true);
      return s;
    }
    best = std::min(best, std::max(lm.ode_max, lm.boundary_max));
  }
  throw ConvergenceError("solve_bvp: no convergence after " + std::to_string(total_iter) +
                             " iterations (best residual " + sci(best) + ")",
                         best);
}

namespace {

// Optimal assignment of eigenvalues to targets by exhaustive search for small n,
// greedy beyond. Returns perm with ev(perm[k]) ~ target(k).
std::vector<int> match_spectrum(const CVector& ev, const CVector& target, double& worst) {
  const int n = static_cast<int>(ev.size());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  auto cost = [&](const std::vector<int>& pm) {
    double w = 0.0;
    for (int k = 0; k < n; ++k) w = std::max(w, std::abs(ev(pm[static_cast<std::size_t>(k)]) - target(k)));
    return w;
  };
  if (n <= 8) {
    std::vector<int> best = perm;
    double bc = cost(perm);
    while (std::next_permutation(perm.begin(), perm.end())) {
      const double c = cost(perm);
      if (c < bc) {
        bc = c;
        best = perm;
      }
    }
    worst = bc;
    return best;
  }
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  for (int k = 0; k < n; ++k) {
    int arg = -1;
    for (int j = 0; j < n; ++j) {
      if (!used[static_cast<std::size_t>(j)] &&
          (arg < 0 || std::abs(ev(j) - target(k)) < std::abs(ev(arg) - target(k)))) {
        arg = j;
      }
    }
    used[static_cast<std::size_t>(arg)] = true;
    perm[static_cast<std::size_t>(k)] = arg;
  }
  worst = cost(perm);
  return perm;
}

}  // namespace

NahmSolution solve_rho_zero(const Configuration& c, const CMatrix& beta0,
                            const SolverConfig& cfg) {
  const int n = c.n();
  if (beta0.rows() != n || beta0.cols() != n) throw DimensionError("solve_rho_zero: beta0 size");
  const Normalization nz = normalize(c);
  const double S = nz.D + nz.centre.norm();
  Eigen::ComplexEigenSolver<CMatrix> es(beta0);
  const CVector target = c.beta_spectrum();
  double worst = 0.0;
  const std::vector<int> perm = match_spectrum(es.eigenvalues(), target, worst);
  if (worst > 1e-8 * S) {
    throw PreconditionError("solve_rho_zero: spectrum of beta0 does not match the configuration (" +
                            sci(worst) + ")");
  }
  CMatrix P(n, n);
  for (int k = 0; k < n; ++k) P.col(k) = es.eigenvectors().col(perm[static_cast<std::size_t>(k)]);
  Eigen::JacobiSVD<CMatrix> svd(P);
  const double cond = svd.singularValues()(0) / svd.singularValues()(n - 1);
  if (!(cond < 1e8)) throw PreconditionError("solve_rho_zero: beta0 is not diagonalizable");

  const SolverConfig r = cfg.resolve(c, false);
  const SU2Triple sigma = rep_from_partition(Partition::zero(n));
  col::Problem p = build_problem(sigma, nz, r, normalized_grid(r, nz.D));
  p.left = col::LeftBoundary::Fixed;
  const cplx i(0.0, 1.0);
  const CMatrix b = (beta0 - cplx(nz.centre(1), nz.centre(2)) * CMatrix::Identity(n, n)) / nz.D;
  p.fixed_target = {CMatrix(0.5 * i * (b + b.adjoint())), CMatrix(0.5 * (b - b.adjoint()))};

  // Guess: constants conjugated by the unitary factor of the eigenvector matrix.
  const Eigen::HouseholderQR<CMatrix> qr(P);
  CMatrix Q = qr.householderQ();
  const CMatrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < n; ++k) {
    const cplx rk = R(k, k);
    if (std::abs(rk) > 0.0) Q.col(k) *= rk / std::abs(rk);
  }
  const Mats tau = normalized_tau(nz);
  Mats aligned;
  for (std::size_t a = 0; a < 3; ++a) aligned[a] = Q * tau[a] * Q.adjoint();
  RVector x = initial_guess(p, aligned);
  const LMResult lm = levenberg_marquardt(p, x, r);
  if (!lm.converged) {
    const double best = std::max(lm.ode_max, lm.boundary_max);
    throw ConvergenceError("solve_rho_zero: no convergence (best residual " +
                               sci(best) + ")",
                           best);
  }
  NahmSolution s = assemble_solution(p, x, sigma, c, nz, r);
  fill_diagnostics(s, lm.iterations, true);
  return s;
}

std::vector<CVector> spectral_invariants(const NahmSolution& s) {
  std::vector<CVector> out;
  out.reserve(s.grid.size());
  const cplx i(0.0, 1.0);
  for (std::size_t m = 0; m < s.grid.size(); ++m) {
    const Triple t = s.T(m);
    out.push_back(charpoly(t[2].matrix() - i * t[1].matrix()));
  }
  return out;
}

SpectralDrift spectral_drift(const NahmSolution& s) {
  const std::vector<CVector> coeffs = spectral_invariants(s);
  const CVector ref = poly_from_roots(s.config.beta_spectrum());
  const double S = s.config.diameter() + s.config.centroid().norm();
  SpectralDrift out;
  for (const auto& c : coeffs) {
    for (Eigen::Index k = 0; k < c.size(); ++k) {
      const double unit = std::pow(S, static_cast<double>(k + 1));
      out.drift = std::max(out.drift, std::abs(c(k) - coeffs.back()(k)) / unit);
      out.mismatch = std::max(out.mismatch, std::abs(c(k) - ref(k)) / unit);
    }
  }
  return out;
}

VerificationReport verify_solution(const NahmSolution& s) {
  VerificationReport rep;
  SolverDiagnostics& dg = rep.diagnostics;
  dg.iterations = s.diagnostics.iterations;
  dg.converged = s.diagnostics.converged;
  const int n = s.n();
  const int d = n * n;
  const Normalization nz = normalize(s.config);
  const double D = nz.D;
  const std::size_t M = s.grid.size();

  // Re-evaluate the discrete residual in normalized units.
  std::vector<double> grid_hat;
  for (double t : s.grid) grid_hat.push_back(t * D);
  col::Problem p = build_problem(s.sigma, nz, s.cfg, grid_hat);
  RVector x(p.unknowns());
  const cplx i(0.0, 1.0);
  for (std::size_t m = 0; m < M; ++m) {
    for (int a = 0; a < 3; ++a) {
      const CMatrix v = (s.V[m][a].matrix() - i * nz.centre(a) * CMatrix::Identity(n, n)) / D;
      u_coords(v, x.data() + static_cast<Eigen::Index>(m) * p.block() + a * d);
    }
  }
  const col::ResidualSummary sum = col::evaluate(p, x);
  dg.residual_nodes.assign(sum.ode_norms.data(), sum.ode_norms.data() + sum.ode_norms.size());
  dg.residual_max = sum.ode_max;
  dg.boundary_max = sum.boundary_max;

  // Commutators along the trajectory, for the value at L and the tail rate.
  std::vector<double> comm(M);
  for (std::size_t m = 0; m < M; ++m) {
    const Triple t = s.T(m);
    double c = 0.0;
    for (int a = 0; a < 3; ++a) {
      c = std::max(c, commutator(t[a].matrix(), t[(a + 1) % 3].matrix()).norm());
    }
    comm[m] = c / (D * D);
  }
  dg.commutator_L = comm.back();

  // eta: least-squares slope of log |[T_i, T_j]| over the tail, skipping the
  // roundoff floor. Constant (commuting) trajectories have eta = inf.
  const double floor = 1e-12;
  std::vector<double> ts, ls;
  const double t_start = s.grid.front() + 0.25 * (s.grid.back() - s.grid.front());
  for (std::size_t m = 0; m < M; ++m) {
    if (s.grid[m] >= t_start && comm[m] > floor) {
      ts.push_back(s.grid[m]);
      ls.push_back(std::log(comm[m]));
    }
  }
  const double cmax = *std::max_element(comm.begin(), comm.end());
  if (cmax <= floor) {
    dg.eta = std::numeric_limits<double>::infinity();
  } else if (ts.size() < 3) {
    // Decays to the floor before the tail window: fit from the peak instead.
    ts.clear();
    ls.clear();
    for (std::size_t m = 0; m < M; ++m) {
      if (comm[m] > floor) {
        ts.push_back(s.grid[m]);
        ls.push_back(std::log(comm[m]));
      }
    }
  }
  if (cmax > floor) {
    if (ts.size() >= 2) {
      const double mt = std::accumulate(ts.begin(), ts.end(), 0.0) / static_cast<double>(ts.size());
      const double ml = std::accumulate(ls.begin(), ls.end(), 0.0) / static_cast<double>(ls.size());
      double sxy = 0.0, sxx = 0.0;
      for (std::size_t k = 0; k < ts.size(); ++k) {
        sxy += (ts[k] - mt) * (ls[k] - ml);
        sxx += (ts[k] - mt) * (ts[k] - mt);
      }
      dg.eta = sxx > 0.0 ? -sxy / sxx : 0.0;
    } else {
      dg.eta = 0.0;
    }
  }

  // Residue at eps.
  dg.residue_eps = 0.0;
  if (!s.sigma.partition.is_zero()) {
    const Triple t0 = s.T(0);
    for (int a = 0; a < 3; ++a) {
      dg.residue_eps = std::max(
          dg.residue_eps, (s.grid.front() * t0[a].matrix() - s.sigma.sigma[a].matrix()).norm());
    }
  }

  const Triple lim = s.T(M - 1);
  const RMatrix z = common_centralizer({lim[0].matrix(), lim[1].matrix(), lim[2].matrix()},
                                       std::max(1e-8, 10.0 * dg.commutator_L));
  rep.limit_centralizer_dim = static_cast<double>(z.cols());

  rep.residual_ok = dg.residual_max <= s.cfg.residual_tol;
  rep.residue_ok = s.sigma.partition.is_zero() ||
                   dg.residue_eps <= s.cfg.residue_factor * s.grid.front() *
                                         (D + nz.centre.norm());
  rep.commutator_ok = dg.commutator_L <= s.cfg.commute_tol;
  rep.eta_ok = dg.eta > 0.0;
  rep.regular_limit_ok = z.cols() == n;
  return rep;
}

}  // namespace nahmflow
