// Serial reference vs production (log-space, OpenMP) PR and permutation-averaged likelihood.
// Set OMP_NUM_THREADS or PRML_WORKERS to vary the thread count.

#include "fixtures.hpp"

#include "prml/likelihood.hpp"
#include "prml/parallel.hpp"
#include "prml/pr.hpp"
#include "prml/pr_reference.hpp"

#include <benchmark/benchmark.h>

#include <cstdlib>

using namespace prml;
using namespace prml::testing;

namespace {

struct Setup {
    KernelCase c;
    std::vector<double> theta;
    Dataset data;
};

Setup make_setup(std::size_t J, std::size_t n) {
    std::mt19937_64 rng(11);
    Setup s{linear_case(J), {}, {}};
    s.theta = draw_theta(s.c, rng);
    s.data = draw_data(s.c, n, rng);
    return s;
}

void BM_pr_reference(benchmark::State& state) {
    const Setup s = make_setup(static_cast<std::size_t>(state.range(0)), 500);
    const auto f0 = GridDensity::uniform(s.c.grid);
    for (auto _ : state)
        benchmark::DoNotOptimize(reference::pr_run(*s.c.kernel, s.theta, f0, WeightSequence::power(), s.data).loglik);
}

void BM_pr(benchmark::State& state) {
    const Setup s = make_setup(static_cast<std::size_t>(state.range(0)), 500);
    const auto f0 = GridDensity::uniform(s.c.grid);
    for (auto _ : state)
        benchmark::DoNotOptimize(pr_run(*s.c.kernel, s.theta, f0, WeightSequence::power(), s.data).loglik);
}

void BM_pr_grad_reference(benchmark::State& state) {
    const Setup s = make_setup(static_cast<std::size_t>(state.range(0)), 500);
    const auto f0 = GridDensity::uniform(s.c.grid);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            reference::pr_run_grad(*s.c.kernel, s.theta, f0, WeightSequence::power(), s.data).loglik);
}

void BM_pr_grad(benchmark::State& state) {
    const Setup s = make_setup(static_cast<std::size_t>(state.range(0)), 500);
    const auto f0 = GridDensity::uniform(s.c.grid);
    for (auto _ : state)
        benchmark::DoNotOptimize(pr_run_grad(*s.c.kernel, s.theta, f0, WeightSequence::power(), s.data).loglik);
}

void averaged(benchmark::State& state, bool serial) {
    const Setup s = make_setup(101, 300);
    const PRModel model{s.c.kernel, GridDensity::uniform(s.c.grid), WeightSequence::power()};
    LikelihoodConfig cfg;
    cfg.permutations = static_cast<std::size_t>(state.range(0));
    cfg.seed = 3;
    for (auto _ : state) {
        const double v = serial ? reference::averaged_loglik(s.theta, s.data, model, cfg, ObjectiveKind::prml)
                                : averaged_loglik(s.theta, s.data, model, cfg, ObjectiveKind::prml);
        benchmark::DoNotOptimize(v);
    }
}

void BM_averaged_reference(benchmark::State& state) { averaged(state, true); }
void BM_averaged(benchmark::State& state) { averaged(state, false); }

}  // namespace

BENCHMARK(BM_pr_reference)->Arg(51)->Arg(201)->Arg(801)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_pr)->Arg(51)->Arg(201)->Arg(801)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_pr_grad_reference)->Arg(51)->Arg(201)->Arg(801)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_pr_grad)->Arg(51)->Arg(201)->Arg(801)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_averaged_reference)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_averaged)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
    if (const char* w = std::getenv("PRML_WORKERS")) set_workers(std::atoi(w));
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
