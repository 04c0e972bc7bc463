// Serial reference vs. OpenMP kernels. Speed-ups need more than one core;
// on a single core the parallel rows measure threading overhead only.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "sparsepair/diagnostics.hpp"
#include "sparsepair/harness.hpp"
#include "sparsepair/simulation.hpp"

using namespace sparsepair;

namespace {

PreferenceMatrix matrix(std::size_t k) {
    SynthSpec spec = calibrated_spec(k);
    spec.seed = 17;
    return generate_preferences(spec).prefs;
}

void BM_TriplesSerial(benchmark::State& state) {
    const auto prefs = matrix(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(serial::count_triples(prefs));
    state.SetComplexityN(state.range(0));
}

void BM_TriplesParallel(benchmark::State& state) {
    const auto prefs = matrix(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(count_triples(prefs, omp_get_max_threads()));
    state.SetComplexityN(state.range(0));
}

BENCHMARK(BM_TriplesSerial)->RangeMultiplier(2)->Range(25, 200)->Complexity(benchmark::oNCubed);
BENCHMARK(BM_TriplesParallel)->RangeMultiplier(2)->Range(25, 200)->Complexity(benchmark::oNCubed);

// One Greedy + S-Window sweep over a 20-topic corpus; argument = workers.
void BM_Sweep(benchmark::State& state) {
    const auto syn = generate_corpus(calibrated_spec(50), 20, 2024);
    const auto corpus = align_corpus(syn.prefs, syn.pointwise, syn.qrels);
    SweepConfig config;
    config.samplers = {SamplerMethod::skip_window, SamplerMethod::global_random};
    config.aggregators = {AggregatorSpec{}};
    config.repetitions = 2;
    config.workers = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(run_sweep(corpus, config));
}

BENCHMARK(BM_Sweep)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
