// Serial reference versus OpenMP assembly of the normal equations.

#include <random>

#include <benchmark/benchmark.h>

#include "nahmflow/collocation.hpp"
#include "nahmflow/configuration.hpp"
#include "nahmflow/su2.hpp"

using namespace nahmflow;
namespace col = nahmflow::collocation;

namespace {

struct Case {
  col::Problem problem;
  RVector x;
};

Case make_case(int n, int nodes) {
  const SU2Triple s = irreducible_triple(n);
  const Configuration c = Configuration::random(n, 3);
  Case k;
  col::Problem& p = k.problem;
  p.n = n;
  p.sigma = {s.sigma[0].matrix(), s.sigma[1].matrix(), s.sigma[2].matrix()};
  p.has_pole = true;
  p.t = col::graded_grid(0.04, 16.0, 0.04, 0.1, 30.0, nodes);
  p.modes = col::pole_modes(p.sigma);
  for (const auto& q : c.points()) p.points.push_back((q - c.centroid()) / c.diameter());
  p.directions = col::spectrum_directions(n);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 0.1);
  k.x.resize(p.unknowns());
  for (Eigen::Index i = 0; i < k.x.size(); ++i) k.x(i) = g(rng);
  return k;
}

void BM_AssembleSerial(benchmark::State& state) {
  const Case k = make_case(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  col::System sys;
  for (auto _ : state) {
    col::assemble_serial(k.problem, k.x, sys);
    benchmark::DoNotOptimize(sys.cost);
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_AssembleParallel(benchmark::State& state) {
  const Case k = make_case(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  col::System sys;
  for (auto _ : state) {
    col::assemble_parallel(k.problem, k.x, sys);
    benchmark::DoNotOptimize(sys.cost);
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

}  // namespace

BENCHMARK(BM_AssembleSerial)->Args({2, 320})->Args({3, 400})->Args({4, 400})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssembleParallel)->Args({2, 320})->Args({3, 400})->Args({4, 400})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
