#include <benchmark/benchmark.h>

#include "pdflood/student_t.hpp"

using namespace pdflood;

static void TCdf(benchmark::State& state) {
    double x = -4.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(t_cdf(x, 4));
        x = x < 4.0 ? x + 0.001 : -4.0;
    }
}
BENCHMARK(TCdf);

static void TQuantile(benchmark::State& state) {
    double p = 0.01;
    for (auto _ : state) {
        benchmark::DoNotOptimize(t_quantile(p, 4));
        p = p < 0.99 ? p + 0.0001 : 0.01;
    }
}
BENCHMARK(TQuantile);

static void ClampedMean(benchmark::State& state) {
    double location = -1.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(clamped_mean({location, 0.25, 4}));
        location = location < 2.0 ? location + 0.001 : -1.0;
    }
}
BENCHMARK(ClampedMean);

static void MixtureQuantile(benchmark::State& state) {
    double pi = 0.05;
    for (auto _ : state) {
        benchmark::DoNotOptimize(mixture_quantile({pi, {0.4, 0.2, 4}}, 0.975));
        pi = pi < 0.95 ? pi + 0.0005 : 0.05;
    }
}
BENCHMARK(MixtureQuantile);

BENCHMARK_MAIN();
