#include <benchmark/benchmark.h>

#include "credlab/credibility.hpp"
#include "credlab/equilibrium.hpp"
#include "credlab/myerson.hpp"

namespace {

using namespace credlab;

Distribution two_point_values() {
  return Distribution::from_points({Rat(1), Rat(2)}, {Rat(1, 2), Rat(1, 2)});
}

Distribution two_point_costs() {
  return Distribution::from_points({Rat(0), Rat(7, 10)},
                                   {Rat(1, 2), Rat(1, 2)});
}

void BM_OptimalReserve(benchmark::State& state) {
  auto values = Distribution::uniform(static_cast<std::size_t>(state.range(0)));
  Rat cost(1, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimal_reserve_index(values, cost));
  }
}
BENCHMARK(BM_OptimalReserve)->Arg(201)->Arg(1001);

void BM_BenchmarkProfit(benchmark::State& state) {
  auto values = Distribution::uniform(static_cast<std::size_t>(state.range(0)));
  auto costs = Distribution::from_points({Rat(0), Rat(1, 2)},
                                         {Rat(1, 2), Rat(1, 2)});
  for (auto _ : state) {
    benchmark::DoNotOptimize(benchmark_profit(values, costs, 2));
  }
}
BENCHMARK(BM_BenchmarkProfit)->Arg(201)->Arg(1001);

void BM_ThresholdSolve(benchmark::State& state) {
  auto values = Distribution::uniform(static_cast<std::size_t>(state.range(0)));
  auto costs = Distribution::from_points({Rat(0), Rat(1, 2)},
                                         {Rat(1, 2), Rat(1, 2)});
  BidSpace space;
  space.levels = {Rat(1, 2)};
  space.tail_floor = Rat(5, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_threshold_fpa(space, values, costs, 2));
  }
}
BENCHMARK(BM_ThresholdSolve)->Arg(201)->Arg(1001);

void BM_CredibilityFpa(benchmark::State& state) {
  auto values = two_point_values();
  auto costs = two_point_costs();
  Protocol p{FpaMenus{{{Rat(1), Rat(5, 3)}, {Rat(2)}}}, 2};
  auto book = book_strategy(p, values);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        check_credibility(p, values, costs, book, SearchBounds{}, 1));
  }
}
BENCHMARK(BM_CredibilityFpa);

void BM_CredibilityAscending(benchmark::State& state) {
  auto values = two_point_values();
  auto costs = two_point_costs();
  Protocol p{Ascending{{{Rat(1), Rat(2)}, {Rat(2)}}}, 2};
  auto book = book_strategy(p, values);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        check_credibility(p, values, costs, book, SearchBounds{}, 1));
  }
}
BENCHMARK(BM_CredibilityAscending);

}  // namespace

BENCHMARK_MAIN();
