#include <benchmark/benchmark.h>

#include <cstdint>
#include <random>
#include <vector>

#include "omnigraph/stats.hpp"

namespace {

using namespace omnigraph;

std::vector<std::vector<double>> rating_blocks(int blocks, int treatments, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> score(1, 5);
  std::vector<std::vector<double>> out(static_cast<std::size_t>(blocks));
  for (auto& row : out) {
    row.resize(static_cast<std::size_t>(treatments));
    for (double& cell : row) cell = score(rng);
  }
  return out;
}

void BM_FriedmanTest(benchmark::State& state) {
  const auto blocks = rating_blocks(static_cast<int>(state.range(0)), 5, 42);
  for (auto _ : state) {
    TestResult r = friedman_test(blocks);
    benchmark::DoNotOptimize(r.p);
  }
}
BENCHMARK(BM_FriedmanTest)->Arg(12)->Arg(48)->Arg(192);

void BM_WilcoxonExact(benchmark::State& state) {
  std::mt19937_64 rng(43);
  std::uniform_int_distribution<int> value(-4, 4);
  std::vector<double> diffs(static_cast<std::size_t>(state.range(0)));
  for (double& d : diffs) d = value(rng);
  if (diffs[0] == 0.0) diffs[0] = 1.0;  // keep at least one informative pair
  for (auto _ : state) {
    TestResult r = wilcoxon_signed_rank(diffs, ZeroPolicy::pratt);
    benchmark::DoNotOptimize(r.p);
  }
}
// 25 is the largest size served by the exact tail enumeration; 26 upward
// switches to the normal approximation, so both regimes appear here.
BENCHMARK(BM_WilcoxonExact)->Arg(12)->Arg(25)->Arg(200);

void BM_HolmAdjust(benchmark::State& state) {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> pvalues(static_cast<std::size_t>(state.range(0)));
  for (double& p : pvalues) p = unit(rng);
  for (auto _ : state) {
    std::vector<double> adjusted = holm_adjust(pvalues);
    benchmark::DoNotOptimize(adjusted.back());
  }
}
BENCHMARK(BM_HolmAdjust)->Arg(10)->Arg(100);

}  // namespace
