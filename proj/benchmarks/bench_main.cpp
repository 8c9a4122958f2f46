#include <benchmark/benchmark.h>

#include "spinlab/exact.hpp"
#include "spinlab/gadget.hpp"
#include "spinlab/graphs.hpp"
#include "spinlab/hub.hpp"
#include "spinlab/meanfield.hpp"

using namespace spinlab;

namespace {

SpinSystem antiferro_block(int N) {
    Rng rng(7);
    return random_regular_graph(2, N, 3, -0.6, rng);
}

HubInstance hub_instance(int N) {
    HubBuildOptions o;
    o.enforce_guard = false;
    o.beta2 = 1.0;
    return build_hub_instance(antiferro_block(N), HubVariant::Antiferro, 0.9, 2, 0.0, o);
}

void BM_PartitionLog(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(1);
    auto model = random_graph(2, n, 0.3, -1.0, 1.0, rng);
    for (auto _ : state) benchmark::DoNotOptimize(partition_log(model));
    state.SetItemsProcessed(state.iterations() * (std::int64_t{1} << n));
}
BENCHMARK(BM_PartitionLog)->Arg(16)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_PhaseSplit(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    auto cp = find_critical_Bo(3);
    for (auto _ : state) benchmark::DoNotOptimize(phase_split(m, 3, cp.Bo / m, cp.alpha_hat).log_ZM);
}
BENCHMARK(BM_PhaseSplit)->Arg(40)->Arg(120)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_TvCollapsedHub(benchmark::State& state) {
    auto inst = hub_instance(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto v = collapsed_distribution_hub(inst, Which::Visible);
        auto h = collapsed_distribution_hub(inst, Which::Hidden);
        benchmark::DoNotOptimize(tv_collapsed(v, h));
    }
}
BENCHMARK(BM_TvCollapsedHub)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_HiddenHubSampler(benchmark::State& state) {
    auto inst = hub_instance(12);
    HiddenHubSampler sampler(inst);
    Rng rng(3);
    for (auto _ : state) benchmark::DoNotOptimize(sampler(rng));
}
BENCHMARK(BM_HiddenHubSampler);

void BM_GroundStateMass(benchmark::State& state) {
    Rng rng(2024);
    GadgetContext ctx;
    ctx.gadget = sample_full_degree_gadget(GadgetParams::low_degree(4, 3, 0.25), rng);
    ctx.beta_B = 4.0;
    std::vector<int> tau(ctx.boundary_size(), 0);
    for (auto _ : state) benchmark::DoNotOptimize(ground_state_mass(ctx, tau));
}
BENCHMARK(BM_GroundStateMass);

}  // namespace
BENCHMARK_MAIN();
