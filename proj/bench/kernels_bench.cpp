// Parallel kernels against their serial references.
//
//   ICUT_THREADS=4 ./icut_bench --benchmark_filter=knn

#include <benchmark/benchmark.h>

#include <numeric>

#include "icut/cutstats.hpp"
#include "icut/datagen.hpp"
#include "icut/knn.hpp"
#include "icut/mlp.hpp"
#include "icut/parallel.hpp"
#include "icut/repr.hpp"

namespace {

using namespace icut;

LabeledDataset make_data(std::size_t n, std::size_t d) {
    auto spec = SyntheticSpec::defaults(Group::orthogonal);
    spec.d = d;
    spec.n_train = n;
    spec.n_test = 1;
    return inject_label_noise(generate_synthetic(spec).train, {0.3, 2, 1});
}

void knn_parallel(benchmark::State& state) {
    const auto ds = make_data(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(build_neighbor_table(ds.features, ds.ids, 20));
}

void knn_serial(benchmark::State& state) {
    const auto ds = make_data(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(reference::build_neighbor_table(ds.features, ds.ids, 20));
}

template <bool Parallel>
void cutstats(benchmark::State& state) {
    const auto ds = make_data(static_cast<std::size_t>(state.range(0)), 10);
    const auto rep = compute_representation(ds, ReprKind::identity);
    CutstatsConfig cfg;
    cfg.k = 20;
    const auto table = build_neighbor_table(rep, cfg.k);
    for (auto _ : state) {
        if constexpr (Parallel)
            benchmark::DoNotOptimize(cutstats_scores(rep, table, cfg));
        else
            benchmark::DoNotOptimize(reference::cutstats_scores(rep, table, cfg));
    }
}

template <bool Parallel>
void mlp_gradient(benchmark::State& state) {
    const auto ds = make_data(static_cast<std::size_t>(state.range(0)), 100);
    Mlp model(ds.dim(), 32, 2);
    std::vector<std::size_t> rows(ds.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::vector<double> grad;
    for (auto _ : state) {
        if constexpr (Parallel)
            benchmark::DoNotOptimize(loss_and_gradient(model, ds.features, ds.noisy_labels, rows, &grad));
        else
            benchmark::DoNotOptimize(reference::loss_and_gradient(model, ds.features, ds.noisy_labels, rows, &grad));
    }
}

}  // namespace

BENCHMARK(knn_parallel)->Args({2000, 5})->Args({2000, 100})->Args({5000, 100})->Unit(benchmark::kMillisecond);
BENCHMARK(knn_serial)->Args({2000, 5})->Args({2000, 100})->Args({5000, 100})->Unit(benchmark::kMillisecond);
BENCHMARK(cutstats<true>)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(cutstats<false>)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(mlp_gradient<true>)->Arg(1024)->Arg(8192)->Unit(benchmark::kMicrosecond);
BENCHMARK(mlp_gradient<false>)->Arg(1024)->Arg(8192)->Unit(benchmark::kMicrosecond);

int main(int argc, char** argv) {
    icut::configure_threads_from_env();
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
