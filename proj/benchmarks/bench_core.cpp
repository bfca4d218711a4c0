#include <benchmark/benchmark.h>

#include "routemix/analysis.hpp"
#include "routemix/emissions.hpp"
#include "routemix/routing.hpp"
#include "routemix/sim.hpp"

using namespace routemix;

namespace {

routing::RoutedDemand random_demand(const network::RoadNetwork& net, std::size_t n, double w, std::uint64_t seed) {
  routing::Router router(net);
  Rng rng(seed);
  routing::RoutedDemand d;
  while (d.size() < n) {
    const auto o = static_cast<network::EdgeIndex>(rng.below(net.edge_count()));
    const auto t = static_cast<network::EdgeIndex>(rng.below(net.edge_count()));
    if (o == t) continue;
    auto p = routing::perturbed_fastest_path(router, o, t, w, rng);
    p.vehicle_id = std::to_string(d.size());
    d.paths.push_back(std::move(p));
  }
  return d;
}

void BM_FastestPath(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto net = network::synth_grid(side, side, 100, 13.89);
  routing::Router router(net);
  Rng rng(1);
  for (auto _ : state) {
    const auto o = static_cast<network::EdgeIndex>(rng.below(net.edge_count()));
    const auto d = static_cast<network::EdgeIndex>(rng.below(net.edge_count()));
    benchmark::DoNotOptimize(routing::fastest_path(router, o, d));
  }
}
BENCHMARK(BM_FastestPath)->Arg(10)->Arg(30)->Arg(60);

void BM_PerturbedPath(benchmark::State& state) {
  const auto net = network::synth_grid(30, 30, 100, 13.89);
  routing::Router router(net);
  Rng rng(2);
  for (auto _ : state) {
    const auto o = static_cast<network::EdgeIndex>(rng.below(net.edge_count()));
    const auto d = static_cast<network::EdgeIndex>(rng.below(net.edge_count()));
    benchmark::DoNotOptimize(routing::perturbed_fastest_path(router, o, d, 5.0, rng));
  }
}
BENCHMARK(BM_PerturbedPath);

void BM_Simulate(benchmark::State& state) {
  const auto net = network::synth_grid(10, 10, 100, 13.89, 2);
  const auto d = random_demand(net, static_cast<std::size_t>(state.range(0)), 5.0, 3);
  Rng rng(4);
  const auto sched = sim::assign_departures(d, 1200, rng);
  sim::SimConfig cfg;
  cfg.horizon = 1200;
  cfg.record_trajectories = false;
  const emissions::EmissionCoefficients coef{"bench", 600, 350, 10, 80, 0, 0.08};
  for (auto _ : state) {
    emissions::EmissionAccumulator acc(net, coef, cfg.dt);
    const auto r = sim::simulate(net, d, sched, cfg, {}, [&](const sim::TrajectoryPoint& p) { acc.add(p); });
    benchmark::DoNotOptimize(acc.total());
    state.counters["vehicles"] = static_cast<double>(r.stats.arrived);
  }
}
BENCHMARK(BM_Simulate)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Gini(benchmark::State& state) {
  Rng rng(5);
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  for (auto& v : x) v = std::exp(2 * rng.normal());
  for (auto _ : state) benchmark::DoNotOptimize(analysis::gini(x));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Gini)->Range(1 << 8, 1 << 18)->Complexity(benchmark::oNLogN);

}  // namespace
BENCHMARK_MAIN();
