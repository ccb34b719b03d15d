// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include "olab/field.hpp"
#include "olab/kernels.hpp"
#include "olab/maximal.hpp"

using namespace olab;
using kernels::Exec;

namespace {

Exec exec_of(const benchmark::State& s) { return s.range(1) ? Exec::Parallel : Exec::Serial; }

Mesh square(int level) { return Mesh{Window::unit(2), level, 1}; }

void BM_dyadic_maximal(benchmark::State& state) {
    const Mesh m = square(static_cast<int>(state.range(0)));
    const MeshField s = make_weight(m, gen::Lognormal{7, 1.0});
    const MeshField f = make_function(m, gen::Lognormal{8, 1.5});
    for (auto _ : state)
        benchmark::DoNotOptimize(multilinear_weighted_maximal({s}, {f}, CubeSet::all_grids(), exec_of(state)).field.values.data());
}

void BM_exhaustive_maximal(benchmark::State& state) {
    const Mesh m = square(static_cast<int>(state.range(0)));
    const MeshField f = make_function(m, gen::Lognormal{9, 1.5});
    for (auto _ : state)
        benchmark::DoNotOptimize(hardy_littlewood_maximal(f, CubeSet::all_mesh_aligned(), exec_of(state)).field.values.data());
}

void BM_tree_integrals(benchmark::State& state) {
    const Mesh m = square(static_cast<int>(state.range(0)));
    const MeshField f = make_function(m, gen::Lognormal{10, 1.5});
    const kernels::GridTree tree(m, zero_shift());
    const kernels::Channels ch{m, {f.values}};
    for (auto _ : state) benchmark::DoNotOptimize(tree.integrals(ch, exec_of(state)).data());
}

}  // namespace

BENCHMARK(BM_dyadic_maximal)->ArgsProduct({{7, 9}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_exhaustive_maximal)->ArgsProduct({{4, 5}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_tree_integrals)->ArgsProduct({{8, 10}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
