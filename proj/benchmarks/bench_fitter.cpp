#include <benchmark/benchmark.h>

#include "rctodds/fitter.hpp"
#include "rctodds/monte_carlo.hpp"
#include "rctodds/population.hpp"

namespace {

using namespace rctodds;

FitData make_data(int n) {
    ScenarioSpec spec;
    spec.n = n;
    spec.seed = 7;
    Rng rng = Rng::stream(spec.seed, 0);
    const StudyPopulation pop = build_population(spec, rng);
    return replication_fit_data(pop, spec, 0);
}

void BM_fit_mle_logit(benchmark::State& state) {
    const FitData data = make_data(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_mle(data, Link::logit));
    }
}
BENCHMARK(BM_fit_mle_logit)->Arg(100)->Arg(1000)->Arg(5000);

void BM_fit_mle_probit(benchmark::State& state) {
    const FitData data = make_data(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_mle(data, Link::probit));
    }
}
BENCHMARK(BM_fit_mle_probit)->Arg(1000);

void BM_assign(benchmark::State& state) {
    ScenarioSpec spec;
    spec.n = static_cast<int>(state.range(0));
    spec.seed = 7;
    Rng rng = Rng::stream(spec.seed, 0);
    const StudyPopulation pop = build_population(spec, rng);
    Rng draw(1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(assign(pop, 0.75, draw));
    }
}
BENCHMARK(BM_assign)->Arg(5000);

void BM_run_study_small(benchmark::State& state) {
    ScenarioSpec spec;
    spec.n = 100;
    spec.replications = 50;
    spec.seed = 7;
    spec.threads = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_study(spec));
    }
}
BENCHMARK(BM_run_study_small);

}  // namespace

BENCHMARK_MAIN();
