#include <benchmark/benchmark.h>

#include "pdmpnet/hjb.hpp"
#include "pdmpnet/linearize.hpp"
#include "pdmpnet/lp.hpp"
#include "pdmpnet/simulate.hpp"

using namespace pdmpnet;

namespace {

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

std::shared_ptr<const DiscreteControlSet> controls(double dx) {
    auto m = traffic3_model(0.1, 1.0, 1.0);
    auto grid = std::make_shared<Grid>(m->network_ptr(), dx);
    return std::make_shared<DiscreteControlSet>(m, grid, dx / 2, 9);
}

}  // namespace

static void BM_Flow(benchmark::State& state) {
    auto m = traffic3_model(0.1, 1.0, 1.0);
    const Policy pol = Policy::from_schedule(Schedule::constant(Control(vec2(-1, 0))));
    for (auto _ : state) {
        const Arc arc = flow(*m, 0, NetworkPoint::on(1, 0.5), pol, 1.0, 1e-3);
        benchmark::DoNotOptimize(arc.end().coord);
    }
}
BENCHMARK(BM_Flow);

static void BM_Simulate(benchmark::State& state) {
    auto m = traffic3_model(0.1, 1.0, 1.0);
    const Policy pol = Policy::from_schedule(Schedule::constant(Control(vec2(0, 0))));
    StopRule stop;
    stop.horizon = 10.0;
    std::uint64_t i = 0;
    for (auto _ : state) {
        RngStream rng(1, i++);
        const auto tr = simulate(*m, NetworkPoint::junction(), 3, pol, stop, rng);
        benchmark::DoNotOptimize(tr.jump_times.size());
    }
}
BENCHMARK(BM_Simulate);

static void BM_SolveValue(benchmark::State& state) {
    auto cs = controls(1.0 / static_cast<double>(state.range(0)));
    for (auto _ : state) {
        const ValueField v = solve_value(*cs);
        benchmark::DoNotOptimize(v.sup_abs());
    }
}
BENCHMARK(BM_SolveValue)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_OccupationSimplex(benchmark::State& state) {
    auto cs = controls(1.0 / static_cast<double>(state.range(0)));
    const OccupationLP lp = build_occupation_lp(cs, NetworkPoint::junction(), 3);
    for (auto _ : state) {
        const LpSolution sol = solve_lp(lp.lp);
        benchmark::DoNotOptimize(sol.objective);
    }
}
BENCHMARK(BM_OccupationSimplex)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
