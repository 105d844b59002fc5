#include <benchmark/benchmark.h>

#include "pdflood/downscale.hpp"
#include "pdflood/synthetic.hpp"

using namespace pdflood;

namespace {

struct Fixture {
    GridPair pair;
    Grid coarse_depth;
    std::vector<HighWaterMark> hwms;
};

Fixture make_fixture(int n) {
    ValleySpec spec;
    spec.nrows = n;
    spec.ncols = n;
    spec.channel_row = n / 2;
    spec.cross_slope = 0.04 * 200.0 / n; // keep the wet fraction stable
    spec.noise_amp = 0.6;
    spec.seed = 99;
    const Grid fine = make_valley(spec);
    const auto channel = row_cells(fine, spec.channel_row);
    const FloodTruth truth = bathtub_flood(fine, channel, kDefaultWaterSurface);
    Grid coarse_depth = coarse_flood(fine, 2, channel, kDefaultCoarseWaterSurface);
    auto hwms = sample_hwms(truth, 5, 0.05, 42);
    return {GridPair(fine, aggregate(fine, 2)), std::move(coarse_depth), std::move(hwms)};
}

} // namespace

static void PdfloodFullRun(benchmark::State& state) {
    const Fixture fixture = make_fixture(static_cast<int>(state.range(0)));
    DownscaleConfig config;
    config.threads = static_cast<int>(state.range(1));
    for (auto _ : state) {
        DownscaleResult result =
            run_pdflood(fixture.pair, fixture.coarse_depth, fixture.hwms, config);
        benchmark::DoNotOptimize(result.mean);
    }
    state.SetComplexityN(state.range(0) * state.range(0));
}
BENCHMARK(PdfloodFullRun)
    ->Args({128, 1})
    ->Args({256, 1})
    ->Args({512, 1})
    ->Args({512, 4})
    ->Complexity()
    ->Unit(benchmark::kMillisecond);

static void CostgrowBaseline(benchmark::State& state) {
    const Fixture fixture = make_fixture(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        Grid baseline = run_costgrow_baseline(fixture.pair, fixture.coarse_depth, {});
        benchmark::DoNotOptimize(baseline);
    }
    state.SetComplexityN(state.range(0) * state.range(0));
}
BENCHMARK(CostgrowBaseline)->Arg(128)->Arg(256)->Arg(512)->Complexity()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
