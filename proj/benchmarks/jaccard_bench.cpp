#include <benchmark/benchmark.h>

#include <boxuq/jaccard.hpp>

#include <random>

namespace {

using boxuq::DiscreteDistribution;

// Masses with ~25% empty cells, the typical occupancy of a union lattice.
DiscreteDistribution random_masses(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mass(0.0, 1.0);
  std::bernoulli_distribution occupied(0.75);
  DiscreteDistribution d;
  d.masses.resize(n, 0.0);
  for (double& m : d.masses)
    if (occupied(rng)) m = mass(rng);
  d.masses[0] = std::max(d.masses[0], 0.5);
  return d;
}

void BM_JaccardNaive(benchmark::State& state) {
  std::mt19937_64 rng(7);
  const int n = static_cast<int>(state.range(0));
  const DiscreteDistribution p = random_masses(n, rng);
  const DiscreteDistribution q = random_masses(n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(boxuq::jaccard_naive(p, q).value);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_JaccardNaive)->RangeMultiplier(4)->Range(256, 4096)->Complexity();

void BM_JaccardFast(benchmark::State& state) {
  std::mt19937_64 rng(7);
  const int n = static_cast<int>(state.range(0));
  const DiscreteDistribution p = random_masses(n, rng);
  const DiscreteDistribution q = random_masses(n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(boxuq::jaccard_fast(p, q).value);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_JaccardFast)
    ->RangeMultiplier(8)
    ->Range(1024, 1 << 19)
    ->Complexity(benchmark::oNLogN);

void BM_JiouGrids(benchmark::State& state) {
  const double resolution = 1.0 / static_cast<double>(state.range(0));
  boxuq::DiscreteBoxDistribution a{{{boxuq::BoxParams::bev(0, 0, 4.4, 1.9, 0.3), 1.0}}};
  boxuq::DiscreteBoxDistribution b{{{boxuq::BoxParams::bev(0.8, 0.4, 4.2, 1.8, 0.5), 1.0}}};
  const boxuq::GridSpec spec_a = boxuq::default_grid_spec(a, resolution);
  const boxuq::GridSpec spec_b = boxuq::default_grid_spec(b, resolution);
  const boxuq::SpatialGrid grid_a = boxuq::rasterize_pg(a, spec_a);
  const boxuq::SpatialGrid grid_b = boxuq::rasterize_pg(b, spec_b);
  for (auto _ : state) {
    benchmark::DoNotOptimize(boxuq::jiou_grids(grid_a, grid_b).value);
  }
}
BENCHMARK(BM_JiouGrids)->Arg(5)->Arg(10)->Arg(20)->Arg(40);

}  // namespace

BENCHMARK_MAIN();
