#include <benchmark/benchmark.h>

#include "pdflood/cost_distance.hpp"
#include "pdflood/synthetic.hpp"

using namespace pdflood;

namespace {

Grid valley_terrain(int n) {
    ValleySpec spec;
    spec.nrows = n;
    spec.ncols = n;
    spec.channel_row = n / 2;
    spec.cross_slope = 0.02;
    spec.noise_amp = 0.4;
    spec.seed = 11;
    return make_valley(spec);
}

} // namespace

static void CostDistanceValley(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Grid elev = valley_terrain(n);
    const auto sources = row_cells(elev, n / 2);
    for (auto _ : state) {
        CostField field = cost_distance(elev, sources);
        benchmark::DoNotOptimize(field.accumulated);
    }
    state.SetComplexityN(static_cast<int64_t>(elev.size()));
}
BENCHMARK(CostDistanceValley)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

static void CostDistanceManySources(benchmark::State& state) {
    // sources from the flooded area rather than a single row
    const int n = static_cast<int>(state.range(0));
    const Grid elev = valley_terrain(n);
    const auto channel = row_cells(elev, n / 2);
    const FloodTruth truth = bathtub_flood(elev, channel, 21.6);
    std::vector<std::size_t> sources;
    for (std::size_t c = 0; c < truth.wet_mask.size(); ++c) {
        if (truth.wet_mask[c]) sources.push_back(c);
    }
    for (auto _ : state) {
        CostField field = cost_distance(elev, sources);
        benchmark::DoNotOptimize(field.accumulated);
    }
    state.SetComplexityN(static_cast<int64_t>(elev.size()));
}
BENCHMARK(CostDistanceManySources)->RangeMultiplier(2)->Range(64, 512)->Complexity();

BENCHMARK_MAIN();
