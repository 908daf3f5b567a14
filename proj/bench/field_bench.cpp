// Compares the serial reference field kernel against the kd-tree kernel at
// capture-realistic sizes (hand 778 vertices, object a few thousand), and
// shows kd-tree thread scaling.

#include <random>

#include <benchmark/benchmark.h>
#include <omp.h>

#include "hoikit/fields.hpp"

namespace {

hoikit::Points random_cloud(int n, std::uint64_t seed, double extent) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-extent, extent);
  hoikit::Points points(n, 3);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) points(i, c) = dist(rng);
  return points;
}

void bm_bruteforce(benchmark::State& state) {
  const auto hand = random_cloud(778, 7, 0.1);
  const auto object = random_cloud(static_cast<int>(state.range(0)), 11, 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        hoikit::field_bruteforce(hand, object, hoikit::kDefaultFieldClamp));
  }
}

void bm_fast(benchmark::State& state) {
  const auto hand = random_cloud(778, 7, 0.1);
  const auto object = random_cloud(static_cast<int>(state.range(0)), 11, 0.1);
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        hoikit::field_fast(hand, object, hoikit::kDefaultFieldClamp));
  }
}

}  // namespace

BENCHMARK(bm_bruteforce)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_fast)
    ->Args({1000, 1})
    ->Args({4000, 1})
    ->Args({4000, 2})
    ->Args({4000, 4})
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
