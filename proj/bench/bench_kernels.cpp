// Serial reference kernels against their parallel counterparts.

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "trendfollow/inversion_kernels.hpp"
#include "trendfollow/montecarlo.hpp"
#include "trendfollow/quadform_dist.hpp"

namespace tf = trendfollow;
namespace kn = trendfollow::kernels;

namespace {

struct InversionCase {
  std::vector<double> mu;
  kn::Contour contour;
  kn::Lattice lattice;
};

InversionCase make_case(long nodes) {
  tf::StrategySpec strat;
  strat.t0 = 50;
  strat.horizon = 100;
  const auto spec = tf::spectrum(tf::build_pnl_matrix(strat, tf::PnlKind::Cumulative),
                                 tf::covariance(tf::MarketSpec{}, strat.total()));
  InversionCase c;
  c.mu = spec.significant();
  const long n_fft = 4 * nodes;
  const double sd = std::sqrt(tf::cumulants(spec).variance());
  c.lattice = {n_fft, 24.0 * sd / static_cast<double>(nodes), -nodes / 2, nodes};
  c.contour.step = 2.0 * std::numbers::pi / c.lattice.period();
  c.contour.terms =
      static_cast<long>(std::ceil(kn::envelope_cutoff(c.mu, 0.0, 1e-10) / c.contour.step)) + 1;
  return c;
}

void BM_DensityDirect(benchmark::State& state) {
  const auto c = make_case(state.range(0));
  std::vector<double> out(c.lattice.count);
  for (auto _ : state) {
    for (long j = 0; j < c.lattice.count; ++j)
      out[j] = kn::density_direct(c.mu, c.contour, c.lattice.node(c.lattice.first + j)).value;
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_DensityLattice(benchmark::State& state) {
  const auto c = make_case(state.range(0));
  std::vector<double> out(c.lattice.count);
  std::vector<double> err(c.lattice.count);
  for (auto _ : state) {
    kn::density_lattice(c.mu, c.contour, c.lattice, out, err);
    benchmark::DoNotOptimize(out.data());
  }
}

tf::SimulationConfig mc_config(long paths, tf::Execution execution) {
  tf::SimulationConfig cfg;
  cfg.strategy.t0 = 200;
  cfg.strategy.horizon = 300;
  cfg.n_paths = paths;
  cfg.execution = execution;
  return cfg;
}

void BM_SimulateSerial(benchmark::State& state) {
  const auto cfg = mc_config(state.range(0), tf::Execution::Serial);
  for (auto _ : state) benchmark::DoNotOptimize(tf::simulate_strategy(cfg).cumulative.data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SimulateParallel(benchmark::State& state) {
  const auto cfg = mc_config(state.range(0), tf::Execution::Parallel);
  for (auto _ : state) benchmark::DoNotOptimize(tf::simulate_strategy(cfg).cumulative.data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_DensityDirect)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DensityLattice)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateSerial)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateParallel)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
