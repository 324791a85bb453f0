// Acceptance suite: one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "nahmflow/flag.hpp"
#include "nahmflow/linalg.hpp"
#include "nahmflow/slodowy.hpp"

using namespace nahmflow;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double max_abs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

double max_abs(const Triple& t) {
  return std::max({max_abs(t[0].matrix()), max_abs(t[1].matrix()), max_abs(t[2].matrix())});
}

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

CMatrix special_unitary(std::uint64_t seed) {
  CMatrix a = random_unitary(2, seed);
  return a / std::sqrt(a.determinant());
}

// Solutions produced by the other criteria, re-checked by the boundary criterion.
std::vector<NahmSolution> g_solutions;

Outcome closed_form() {
  const auto t0 = std::chrono::steady_clock::now();
  const Configuration c({Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(-1, 0, 0)});
  const NahmSolution s = solve_bvp(Partition::regular(2), c, {});
  const double elapsed = seconds_since(t0);
  double err = 0.0;
  for (std::size_t m = 0; m < s.grid.size(); ++m) {
    if (s.grid[m] < 0.02 - 1e-12 || s.grid[m] > 8.0) continue;
    err = std::max(err, max_abs(s.T(m) - su2_closed_form(2.0, s.grid[m])));
  }
  g_solutions.push_back(s);
  return {err < 1e-6 && elapsed < 30.0 && s.grid.front() <= 0.02 + 1e-12,
          fmt("max node error %.2e", err) + fmt(", %.2f s", elapsed)};
}

Outcome gradient_flow() {
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int n = 2 + k % 3;
    const Triple t = random_triple(n, 500 + static_cast<std::uint64_t>(k));
    const Triple v = random_triple(n, 900 + static_cast<std::uint64_t>(k));
    const double h = 1e-4;
    const double num = (phi(t + v * h) - phi(t - v * h)) / (2 * h);
    const double ana = inner(grad_phi(t), v);
    worst = std::max(worst, std::abs(num - ana) / std::abs(ana));
  }
  return {worst < 1e-6, fmt("max relative error %.2e over 20 triples", worst)};
}

Outcome pole_residues() {
  const Configuration c({Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(-1, 0, 0)});
  std::vector<double> res;
  for (double eps : {0.05, 0.025, 0.0125}) {
    SolverConfig cfg;
    cfg.eps = eps;
    const NahmSolution s = solve_bvp(Partition::regular(2), c, cfg);
    res.push_back(s.diagnostics.residue_eps);
    g_solutions.push_back(s);
  }
  const double o1 = std::log2(res[0] / res[1]);
  const double o2 = std::log2(res[1] / res[2]);
  return {o1 >= 0.9 && o2 >= 0.9 && res[0] > res[1] && res[1] > res[2],
          fmt("residues %.2e", res[0]) + fmt(" %.2e", res[1]) + fmt(" %.2e", res[2]) +
              fmt(", orders %.2f", o1) + fmt(" %.2f", o2)};
}

Outcome lax_invariants() {
  double drift = 0.0, mismatch = 0.0;
  int count = 0;
  auto take = [&](const NahmSolution& s) {
    const SpectralDrift d = spectral_drift(s);
    drift = std::max(drift, d.drift);
    mismatch = std::max(mismatch, d.mismatch);
    g_solutions.push_back(s);
    ++count;
  };
  for (int n = 2; n <= 4; ++n) {
    for (std::uint64_t seed = 1; seed <= 2; ++seed) {
      take(solve_bvp(Partition::regular(n), Configuration::random(n, 60 + seed * 7 + n), {}));
    }
  }
  const Configuration c3 = Configuration::random(3, 71);
  take(solve_bvp(Partition::subregular(3), c3, {}));
  take(solve_bvp(Partition::zero(3), c3, {}));
  CMatrix beta0 = c3.beta_spectrum().asDiagonal();
  beta0(0, 1) = 0.5;
  beta0(0, 2) = cplx(0.0, -0.25);
  take(solve_rho_zero(c3, beta0, {}));
  return {drift < 1e-6 && mismatch < 1e-6,
          fmt("drift %.2e", drift) + fmt(", mismatch %.2e", mismatch) +
              " over " + std::to_string(count) + " solutions"};
}

Outcome equivariance() {
  const auto t0 = std::chrono::steady_clock::now();
  double perm = 0.0, rot = 0.0, scale = 0.0, trans = 0.0, uniq = 0.0;
  for (int k = 0; k < 10; ++k) {
    const int n = k < 5 ? 2 : 3;
    const std::uint64_t seed = 100 + static_cast<std::uint64_t>(k);
    const Configuration c = Configuration::random(n, seed);
    const std::vector<int> p = n == 2 ? std::vector<int>{1, 0} : std::vector<int>{2, 0, 1};
    perm = std::max(perm, check_permutation_equivariance(c, p, {}));
    rot = std::max(rot, check_so3_equivariance(c, special_unitary(seed), {}));
    const Flag f = berry_robbins_map(c, {});
    scale = std::max(scale, flag_distance(berry_robbins_map(c.scaled(2.5), {}), f));
    trans = std::max(trans, flag_distance(berry_robbins_map(c.translated(Eigen::Vector3d(1.5, -0.5, 2.0)), {}), f));
    for (std::uint64_t s : {7ULL, 1234ULL}) {
      SolverConfig cfg;
      cfg.seed = s;
      cfg.starts = 6;
      uniq = std::max(uniq, flag_distance(berry_robbins_map(c, cfg), f));
    }
  }
  const double elapsed = seconds_since(t0);
  return {perm < 1e-5 && rot < 1e-4 && scale < 1e-5 && trans < 1e-5 && uniq < 1e-6 && elapsed < 600.0,
          fmt("permutation %.1e", perm) + fmt(", rotation %.1e", rot) + fmt(", scale %.1e", scale) +
              fmt(", translation %.1e", trans) + fmt(", seeds %.1e", uniq) + fmt(", %.1f s", elapsed)};
}

Outcome slodowy() {
  bool dims = true, transversal = true;
  for (int n = 1; n <= 6; ++n) {
    for (const Partition& p : partitions_of(n)) {
      const SlodowySlice s = slodowy_slice(p);
      dims = dims && static_cast<int>(centralizer_in_gl(s.sl2.X).size()) == centralizer_dim_formula(p);
      if (n <= 5) transversal = transversal && transversality_check(s).ok();
    }
  }
  bool regular = true;
  double chi_err = 0.0;
  for (int n = 2; n <= 4; ++n) {
    const Configuration c = Configuration::random(n, 200 + static_cast<std::uint64_t>(n));
    const SliceIntersection r = orbit_slice_intersection(c, Partition::regular(n), 1);
    regular = regular && r.points.size() == 1 && r.local_dims.front() == 0;
    if (r.points.empty()) continue;
    const CMatrix& m = r.points.front().matrix;
    chi_err = std::max(chi_err, max_abs(CMatrix(chi_map(m) - poly_from_roots(c.beta_spectrum()))));
    // Same orbit as the companion matrix: same characteristic polynomial and
    // nonderogatory (centralizer of dimension n).
    regular = regular && static_cast<int>(centralizer_in_gl(m, 1e-8).size()) == n;
  }
  const SliceIntersection sub =
      orbit_slice_intersection(Configuration::random(3, 210), Partition::subregular(3), 1);
  bool sub_ok = !sub.points.empty();
  for (int d : sub.local_dims) sub_ok = sub_ok && d == 2;
  return {dims && transversal && regular && chi_err < 1e-10 && sub_ok,
          std::string("dims ") + (dims ? "ok" : "bad") + ", transversality " +
              (transversal ? "ok" : "bad") + fmt(", regular char-poly error %.1e", chi_err) +
              ", subregular local dim " + (sub.local_dims.empty() ? "none" : std::to_string(sub.local_dims.front()))};
}

Outcome rho_zero() {
  double flag_err = 0.0, traj_err = 0.0;
  for (int n = 2; n <= 4; ++n) {
    const Configuration c = Configuration::random(n, 300 + static_cast<std::uint64_t>(n));
    const CMatrix g = random_unitary(n, 310 + static_cast<std::uint64_t>(n));
    const CMatrix beta0 = g * c.beta_spectrum().asDiagonal() * g.adjoint();
    const NahmSolution s = solve_rho_zero(c, beta0, {});
    const Triple expect = adjoint(g, config_to_tau(c));
    for (std::size_t m = 0; m < s.grid.size(); ++m) traj_err = std::max(traj_err, max_abs(s.T(m) - expect));
    const Flag f = flag_from_limit(limit_triple(s).limit, c);
    const Flag ref = flag_from_limit(expect, c);
    flag_err = std::max(flag_err, flag_distance(f, ref));
    g_solutions.push_back(s);
  }
  return {flag_err < 1e-6 && traj_err < 1e-6,
          fmt("flag distance %.1e", flag_err) + fmt(", trajectory error %.1e", traj_err)};
}

Outcome representations() {
  double su2 = 0.0, sl2 = 0.0;
  for (int n = 1; n <= 6; ++n) {
    for (const Partition& p : partitions_of(n)) {
      const SU2Triple t = rep_from_partition(p);
      su2 = std::max(su2, su2_relation_error(t.sigma));
      sl2 = std::max(sl2, sl2_relation_error(complexify(t)));
    }
  }
  return {su2 < 1e-13 && sl2 < 1e-13, fmt("su(2) relations %.1e", su2) + fmt(", sl(2) relations %.1e", sl2)};
}

// Runs after the solving criteria so it sees every solution they produced.
Outcome boundary_conditions() {
  double comm = 0.0, eta = std::numeric_limits<double>::infinity();
  bool regular = true;
  for (const auto& s : g_solutions) {
    const VerificationReport r = verify_solution(s);
    comm = std::max(comm, r.diagnostics.commutator_L);
    eta = std::min(eta, r.diagnostics.eta);
    regular = regular && r.regular_limit_ok;
  }
  return {!g_solutions.empty() && comm < 1e-6 && eta > 0.0 && regular,
          std::to_string(g_solutions.size()) + " solutions" + fmt(", max commutator at L %.1e", comm) +
              fmt(", min eta %.2f", eta) + (regular ? ", limits regular" : ", irregular limit")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> order = {
      {1, "closed-form two-point solution", closed_form},
      {2, "gradient of phi", gradient_flow},
      {3, "pole residues", pole_residues},
      {5, "characteristic polynomial invariants", lax_invariants},
      {6, "equivariance suite", equivariance},
      {7, "Slodowy slices", slodowy},
      {8, "solutions without a pole", rho_zero},
      {9, "representation relations", representations},
      {4, "boundary behaviour of all solutions", boundary_conditions},
  };
  std::vector<std::pair<int, std::string>> lines;
  bool all = true;
  for (const auto& c : order) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    lines.emplace_back(c.id, std::string(o.pass ? "PASS" : "FAIL") + " criterion " +
                                 std::to_string(c.id) + " (" + c.name + "): " + o.detail);
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& l : lines) std::printf("%s\n", l.second.c_str());
  return all ? 0 : 1;
}
