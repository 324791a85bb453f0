#include <doctest.h>

#include <random>

#include "nahmflow/collocation.hpp"
#include "nahmflow/linalg.hpp"
#include "nahmflow/su2.hpp"

using namespace nahmflow;
namespace col = nahmflow::collocation;

namespace {

std::array<CMatrix, 3> mats(const SU2Triple& s) {
  return {s.sigma[0].matrix(), s.sigma[1].matrix(), s.sigma[2].matrix()};
}

col::Problem make_problem(const Partition& rho, std::vector<Eigen::Vector3d> points,
                          int nodes = 24) {
  col::Problem p;
  const SU2Triple s = rep_from_partition(rho);
  p.n = rho.n();
  p.sigma = mats(s);
  p.has_pole = !rho.is_zero();
  p.t = col::graded_grid(0.05, 4.0, 0.2, 0.5, 3.0, nodes);
  p.modes = col::pole_modes(p.sigma);
  p.points = std::move(points);
  p.directions = col::spectrum_directions(p.n);
  return p;
}

RVector random_state(const col::Problem& p, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  RVector x(p.unknowns());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = g(rng);
  return x;
}

std::vector<Eigen::Vector3d> three_points() {
  return {{0.5, 0.0, 0.1}, {-0.3, 0.4, 0.0}, {-0.2, -0.4, -0.1}};
}

}  // namespace

TEST_CASE("pole modes of the regular triple") {
  for (int n = 1; n <= 5; ++n) {
    const auto m = col::pole_modes(mats(irreducible_triple(n)));
    int bounded = 0;
    for (const auto& q : m.bounded) bounded += static_cast<int>(q.cols());
    CHECK(bounded == n * n + 2 * n);
    CHECK(m.unbounded.cols() == 2 * n * n - 2 * n);
    // Bounded exponents 0, 1, ..., n - 1 with multiplicities 3, 5, ..., 2n + 1.
    REQUIRE(m.bounded.size() == static_cast<std::size_t>(n));
    for (int g = 0; g < n; ++g) {
      CHECK(m.bounded_exp[static_cast<std::size_t>(g)] == doctest::Approx(g));
      CHECK(m.bounded[static_cast<std::size_t>(g)].cols() == 2 * g + 3);
    }
  }
  // Frozen for n = 3: eigenvalue 1 eight times, 2 once, 3 three times.
  const auto m3 = col::pole_modes(mats(irreducible_triple(3)));
  const std::vector<double> eig3 = {1, 1, 1, 1, 1, 1, 1, 1, 2, 3, 3, 3};
  CHECK(m3.unbounded_eig == eig3);
}

TEST_CASE("pole modes are orthonormal eigenvectors") {
  for (const Partition& rho : {Partition({3}), Partition({2, 1}), Partition({2, 2})}) {
    const auto m = col::pole_modes(mats(rep_from_partition(rho)));
    const int N = 3 * rho.n() * rho.n();
    RMatrix all(N, 0);
    auto append = [&](const RMatrix& q) {
      RMatrix next(N, all.cols() + q.cols());
      next << all, q;
      all = next;
    };
    append(m.unbounded);
    for (const auto& q : m.bounded) append(q);
    CHECK(all.cols() == N);
    CHECK((all.transpose() * all - RMatrix::Identity(N, N)).cwiseAbs().maxCoeff() < 1e-10);
  }
  const auto sub = col::pole_modes(mats(rep_from_partition(Partition({2, 1}))));
  CHECK(sub.unbounded.cols() == 8);
  const auto zero = col::pole_modes(mats(rep_from_partition(Partition::zero(3))));
  CHECK(zero.unbounded.cols() == 0);
}

TEST_CASE("spectrum directions") {
  for (int n = 1; n <= 5; ++n) {
    const auto d = col::spectrum_directions(n);
    CHECK(d.size() == static_cast<std::size_t>(3 + (n + 1) * (n + 2) / 2 + 2));
    for (const auto& v : d) CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("problem row counts") {
  const auto p = make_problem(Partition({3}), three_points());
  CHECK(p.left_rows() == 12);
  CHECK(p.right_rows() == 27 + static_cast<int>(p.directions.size()) * 3);
  CHECK(p.rows() == 27 * 23 + p.left_rows() + p.right_rows());
  CHECK(col::residual_vector(p, random_state(p, 1, 0.1)).size() == p.rows());
}

TEST_CASE("sparse Jacobian matches finite differences") {
  struct Case {
    Partition rho;
    std::vector<Eigen::Vector3d> pts;
    col::LeftBoundary left;
  };
  const std::vector<Case> cases = {
      {Partition({2}), {{0.5, 0, 0}, {-0.5, 0, 0}}, col::LeftBoundary::Pole},
      {Partition({3}), three_points(), col::LeftBoundary::Pole},
      {Partition({2, 1}), three_points(), col::LeftBoundary::Pole},
      {Partition::zero(3), three_points(), col::LeftBoundary::Fixed},
  };
  for (const auto& c : cases) {
    CAPTURE(c.rho.to_string());
    auto p = make_problem(c.rho, c.pts, 16);
    p.left = c.left;
    if (c.left == col::LeftBoundary::Fixed) {
      p.fixed_target = {random_antihermitian(p.n, 3).matrix(), random_antihermitian(p.n, 4).matrix()};
    }
    const RVector x = random_state(p, 7, 0.3);
    const auto lin = col::linearize_reference(p, x);
    CHECK((lin.residual - col::residual_vector(p, x)).cwiseAbs().maxCoeff() < 1e-13);
    const RMatrix jac(lin.jacobian);
    const double h = 1e-6;
    double err = 0.0;
    double scale = 1.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      RVector xp = x, xm = x;
      xp(k) += h;
      xm(k) -= h;
      const RVector fd = (col::residual_vector(p, xp) - col::residual_vector(p, xm)) / (2 * h);
      err = std::max(err, (fd - jac.col(k)).cwiseAbs().maxCoeff());
      scale = std::max(scale, fd.cwiseAbs().maxCoeff());
    }
    CHECK(err / scale < 1e-6);
  }
}

TEST_CASE("serial and parallel assembly agree") {
  for (const Partition& rho : {Partition({2}), Partition({3}), Partition({2, 1})}) {
    CAPTURE(rho.to_string());
    const std::vector<Eigen::Vector3d> pts =
        rho.n() == 2 ? std::vector<Eigen::Vector3d>{{0.5, 0, 0}, {-0.5, 0, 0}} : three_points();
    const auto p = make_problem(rho, pts, 40);
    const RVector x = random_state(p, 11, 0.2);
    col::System a, b;
    col::assemble_serial(p, x, a);
    col::assemble_parallel(p, x, b);
    REQUIRE(a.diag.size() == b.diag.size());
    REQUIRE(a.upper.size() == b.upper.size());
    double d = 0.0, scale = 1.0;
    for (std::size_t m = 0; m < a.diag.size(); ++m) {
      d = std::max(d, (a.diag[m] - b.diag[m]).cwiseAbs().maxCoeff());
      scale = std::max(scale, a.diag[m].cwiseAbs().maxCoeff());
    }
    for (std::size_t m = 0; m < a.upper.size(); ++m) {
      d = std::max(d, (a.upper[m] - b.upper[m]).cwiseAbs().maxCoeff());
    }
    CHECK(d / scale < 1e-12);
    CHECK((a.gradient - b.gradient).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, a.gradient.cwiseAbs().maxCoeff()));
    CHECK(a.cost == doctest::Approx(b.cost).epsilon(1e-12));
    CHECK(a.ode_max == doctest::Approx(b.ode_max).epsilon(1e-12));
    CHECK(a.boundary_max == doctest::Approx(b.boundary_max).epsilon(1e-12));

    const auto e = col::evaluate(p, x);
    CHECK(e.cost == doctest::Approx(a.cost).epsilon(1e-12));
    CHECK(e.ode_max == doctest::Approx(a.ode_max).epsilon(1e-12));
    CHECK(e.boundary_max == doctest::Approx(a.boundary_max).epsilon(1e-12));
    CHECK(e.cost == doctest::Approx(0.5 * col::residual_vector(p, x).squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("parallel evaluation is deterministic") {
  const auto p = make_problem(Partition({3}), three_points(), 60);
  const RVector x = random_state(p, 5, 0.2);
  const auto a = col::evaluate(p, x);
  for (int rep = 0; rep < 3; ++rep) {
    const auto b = col::evaluate(p, x);
    CHECK(a.cost == b.cost);
    CHECK(a.ode_max == b.ode_max);
  }
}

TEST_CASE("block tridiagonal solver matches a dense solve") {
  const int N = 5, M = 7;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  RMatrix J(3 * N * M, N * M);
  for (Eigen::Index i = 0; i < J.rows(); ++i) {
    for (Eigen::Index k = 0; k < J.cols(); ++k) {
      const Eigen::Index blk = i / (3 * N);
      const Eigen::Index kb = k / N;
      J(i, k) = (kb == blk || kb == blk + 1) ? g(rng) : 0.0;
    }
  }
  const RMatrix A = J.transpose() * J + 1e-3 * RMatrix::Identity(N * M, N * M);
  std::vector<RMatrix> diag, upper;
  for (int m = 0; m < M; ++m) {
    diag.push_back(A.block(m * N, m * N, N, N));
    if (m + 1 < M) upper.push_back(A.block(m * N, (m + 1) * N, N, N));
  }
  RVector rhs(N * M);
  for (Eigen::Index i = 0; i < rhs.size(); ++i) rhs(i) = g(rng);
  const RVector x = col::solve_block_tridiagonal(diag, upper, rhs);
  const RVector ref = A.ldlt().solve(rhs);
  CHECK((x - ref).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, ref.cwiseAbs().maxCoeff()));

  std::vector<RMatrix> bad = diag;
  bad[2] = -RMatrix::Identity(N, N);
  CHECK_THROWS_AS(col::solve_block_tridiagonal(bad, upper, rhs), std::runtime_error);
  CHECK(col::solve_block_tridiagonal({}, {}, RVector()).size() == 0);
}

TEST_CASE("graded grid") {
  const auto t = col::graded_grid(0.02, 12.0, 0.04, 0.1, 30.0);
  CHECK(t.front() == 0.02);
  CHECK(t.back() == 12.0);
  for (std::size_t m = 1; m < t.size(); ++m) {
    const double h = t[m] - t[m - 1];
    CHECK(h > 0.0);
    CHECK(h <= 0.1 * (1 + 1e-9) + 1e-12);
    CHECK(h <= 0.04 * t[m] * (1 + 1e-6) + 0.1 * 1e-9);
  }
  // Geometric near eps: consecutive spacing ratios are constant there.
  const double r1 = (t[2] - t[1]) / (t[1] - t[0]);
  const double r2 = (t[3] - t[2]) / (t[2] - t[1]);
  CHECK(r1 == doctest::Approx(r2).epsilon(1e-6));

  const auto fixed = col::graded_grid(0.02, 12.0, 0.04, 0.1, 30.0, 100);
  CHECK(fixed.size() == 100);
  CHECK(col::graded_grid(5.0, 5.5, 0.04, 0.1, 30.0).size() == 16);  // node floor
  const auto zero_start = col::graded_grid(0.0, 2.0, 0.04, 0.1, 30.0);
  CHECK(zero_start.front() == 0.0);
  CHECK(zero_start[1] == doctest::Approx(0.1).epsilon(1e-6));

  CHECK_THROWS_AS(col::graded_grid(1.0, 0.5, 0.04, 0.1, 30.0), PreconditionError);
  CHECK_THROWS_AS(col::graded_grid(-1.0, 0.5, 0.04, 0.1, 30.0), PreconditionError);
  CHECK_THROWS_AS(col::graded_grid(0.1, 0.5, 0.0, 0.1, 30.0), PreconditionError);
}
