#include <benchmark/benchmark.h>

#include "revpath/cme.hpp"
#include "revpath/crn.hpp"
#include "revpath/ldp.hpp"
#include "revpath/reversal.hpp"

using namespace revpath;

namespace {

const crn::ReactionNetwork& mono() {
    static const auto net = crn::parse_network("species S\nconst A = 1.0\nreaction A <=> S @ kf=1, kb=1\n");
    return net;
}

const crn::ReactionNetwork& bistable() {
    static const auto net = crn::parse_network(
        "species S\nconst A = 1.0\nreaction A + 2 S <=> 3 S @ kf=6, kb=1\nreaction A <=> S @ kf=6, kb=11\n");
    return net;
}

void BM_SkellamRow(benchmark::State& state) {
    const double mu = static_cast<double>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(cme::skellam_distribution(mu, 0.7 * mu));
}
BENCHMARK(BM_SkellamRow)->Arg(1)->Arg(10)->Arg(100);

void BM_BuildKernel(benchmark::State& state) {
    const double V = static_cast<double>(state.range(0));
    const auto dom = cme::LatticeDomain::from_cells(0, static_cast<std::int64_t>(4 * V), V);
    for (auto _ : state) benchmark::DoNotOptimize(cme::build_kernel(mono(), dom, 1e-3));
}
BENCHMARK(BM_BuildKernel)->Arg(30)->Arg(150)->Unit(benchmark::kMillisecond);

void BM_ForwardEvolve(benchmark::State& state) {
    const double V = static_cast<double>(state.range(0));
    const auto dom = cme::LatticeDomain::from_cells(0, static_cast<std::int64_t>(4 * V), V);
    const auto kernel = cme::build_kernel(mono(), dom, 1e-3);
    const Vec init = cme::point_mass(dom, reversal::nearest_lattice_point(1.0, dom));
    for (auto _ : state) benchmark::DoNotOptimize(cme::forward_evolve(kernel, dom, init, 1000));
}
BENCHMARK(BM_ForwardEvolve)->Arg(30)->Arg(150)->Unit(benchmark::kMillisecond);

void BM_NppPrehistory(benchmark::State& state) {
    const double V = static_cast<double>(state.range(0));
    const auto dom = cme::LatticeDomain::from_cells(0, static_cast<std::int64_t>(4 * V), V);
    for (auto _ : state) benchmark::DoNotOptimize(reversal::npp_compute(mono(), dom, 1.0, 2.0, 1.0, 1000));
}
BENCHMARK(BM_NppPrehistory)->Arg(30)->Arg(150)->Unit(benchmark::kMillisecond);

void BM_ShootMono(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(ldp::shoot_nop(mono(), 1.0, 2.0, 1.0));
}
BENCHMARK(BM_ShootMono)->Unit(benchmark::kMillisecond);

void BM_ShootBistable(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(ldp::shoot_nop(bistable(), 1.0, 3.0, 1.0));
}
BENCHMARK(BM_ShootBistable)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
