#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "qba/error_estimation.hpp"
#include "qba/reference.hpp"
#include "qba/sweep.hpp"
#include "qba/synthspace.hpp"

namespace {

qba::SweepSpec window() {
    // About 250k cells around a low-incidence table.
    return qba::window_around({1500, 1400, 100000, 100000}, {0.6, 0.99}, 0.025, 1e-4);
}

void BM_GridReference(benchmark::State& state) {
    const auto spec = window();
    for (auto _ : state) benchmark::DoNotOptimize(qba::reference::sweep_grid(spec));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(spec.grid_size()));
}

void BM_GridSerial(benchmark::State& state) {
    const auto spec = window();
    qba::SweepOptions o;
    o.execution = qba::Execution::serial;
    for (auto _ : state) benchmark::DoNotOptimize(qba::sweep_grid(spec, o));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(spec.grid_size()));
}

void BM_GridParallel(benchmark::State& state) {
    const auto spec = window();
    qba::SweepOptions o;
    o.threads = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(qba::sweep_grid(spec, o));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(spec.grid_size()));
}

void BM_FrontierFullSquare(benchmark::State& state) {
    const qba::SweepSpec spec{{100, 100, 100000, 100000}, 0.0, 1.0, 0.0, 1.0, 1e-4};
    qba::SweepOptions o;
    o.threads = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(qba::sweep_frontier(spec, o));
}

void BM_FullSpace(benchmark::State& state) {
    const auto exec = state.range(0) == 0 ? qba::Execution::serial : qba::Execution::parallel;
    for (auto _ : state) benchmark::DoNotOptimize(qba::full_space({}, exec));
}

void BM_Confusion(benchmark::State& state) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<qba::EvaluationRecord> records(1 << 20);
    for (auto& r : records) r = {u(rng) < 0.3, u(rng)};
    const auto exec = state.range(0) == 0 ? qba::Execution::serial : qba::Execution::parallel;
    for (auto _ : state) benchmark::DoNotOptimize(qba::accumulate(records, exec));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(records.size()));
}

}  // namespace

BENCHMARK(BM_GridReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FrontierFullSquare)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FullSpace)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Confusion)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
