#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "kmax/anticonc.hpp"
#include "kmax/multitest.hpp"
#include "kmax/order_stats.hpp"
#include "kmax/sampler.hpp"

namespace {

using namespace kmax;

void BM_SampleBatch(benchmark::State& state) {
    const int p = static_cast<int>(state.range(0));
    const auto model = build_covariance(CovFamily::ar1, p, std::vector<double>{0.5});
    GaussianSampler sampler(model, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sampler.sample(10000));
    }
    state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_SampleBatch)->Arg(8)->Arg(64);

void BM_KMax(benchmark::State& state) {
    std::mt19937_64 gen(2);
    std::normal_distribution<double> normal;
    std::vector<double> x(1000);
    for (auto& v : x) v = normal(gen);
    for (auto _ : state) {
        benchmark::DoNotOptimize(k_max(x, static_cast<int>(state.range(0))));
    }
}
BENCHMARK(BM_KMax)->Arg(1)->Arg(5)->Arg(500);

void BM_KTildeMax(benchmark::State& state) {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> normal;
    std::vector<double> x(static_cast<std::size_t>(state.range(0)));
    for (auto& v : x) v = normal(gen);
    RngStream rng(7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(k_tilde_max(x, 5, rng));
    }
}
BENCHMARK(BM_KTildeMax)->Arg(64)->Arg(1024);

void BM_SupIntervalProb(benchmark::State& state) {
    const auto model = build_covariance(CovFamily::identity, 8, {});
    GaussianSampler sampler(model, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            estimate_sup_interval_prob(sampler, 2, 0.1, default_grid(8, 0.1), 100000, 4));
    }
}
BENCHMARK(BM_SupIntervalProb)->Unit(benchmark::kMillisecond);

void BM_BootstrapStatistics(benchmark::State& state) {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> normal;
    mht::DataMatrix data;
    data.u.resize(100, 10);
    for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 10; ++j) data.u(i, j) = normal(gen);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mht::bootstrap_statistics(data, 500, 11));
    }
    state.SetItemsProcessed(state.iterations() * 500);
}
BENCHMARK(BM_BootstrapStatistics)->Unit(benchmark::kMillisecond);

void BM_StepDown(benchmark::State& state) {
    std::mt19937_64 gen(6);
    std::normal_distribution<double> normal;
    mht::DataMatrix data;
    data.u.resize(100, 10);
    for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 10; ++j) data.u(i, j) = 0.2 + normal(gen);
    const Eigen::VectorXd t = mht::compute_test_statistics(data);
    const mht::CriticalValueOracle oracle(0.1, 2, mht::bootstrap_statistics(data, 500, 12));
    for (auto _ : state) {
        benchmark::DoNotOptimize(mht::stepdown_kfwer(t, oracle, 2, 0.1));
    }
}
BENCHMARK(BM_StepDown);

}  // namespace

BENCHMARK_MAIN();
