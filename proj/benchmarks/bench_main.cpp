#include "onestep/activation.hpp"
#include "onestep/largelr.hpp"
#include "onestep/regress.hpp"
#include "onestep/simulate.hpp"
#include "onestep/spectra.hpp"
#include "onestep/theory.hpp"

#include <benchmark/benchmark.h>

using namespace onestep;

namespace {

ExperimentConfig config(Eigen::Index d) {
    ExperimentConfig e;
    e.d = d;
    e.n = 4 * d;
    e.N = 2 * d;
    return e;
}

void BM_Gradient(benchmark::State& state) {
    const auto e = config(state.range(0));
    const auto act = make_activation("tanh");
    const auto teacher = make_teacher(center(make_activation("relu")), default_beta(e.d), 0.1);
    const auto net = init_network(e, 0);
    const auto data = sample_dataset(e, teacher, 0, StreamRole::train);
    for (auto _ : state) benchmark::DoNotOptimize(gradient(net, data, act));
}
BENCHMARK(BM_Gradient)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_RidgeFit(benchmark::State& state) {
    const auto e = config(state.range(0));
    const auto act = make_activation("tanh");
    const auto teacher = make_teacher(center(make_activation("relu")), default_beta(e.d), 0.1);
    const auto net = init_network(e, 0);
    const auto data = sample_dataset(e, teacher, 0, StreamRole::fresh);
    const auto Phi = ck_features(net.W, data.X, act);
    for (auto _ : state) benchmark::DoNotOptimize(ridge_fit(Phi, data.y, 1e-3));
}
BENCHMARK(BM_RidgeFit)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_SpectralSummary(benchmark::State& state) {
    const auto e = config(state.range(0));
    const auto net = init_network(e, 0);
    for (auto _ : state) benchmark::DoNotOptimize(spectral_summary(net.W, SpectrumKind::svd));
}
BENCHMARK(BM_SpectralSummary)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_SolveM1M2(benchmark::State& state) {
    const auto act = center(make_activation("tanh"));
    double z = 1e-3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_m1_m2(z, 4.0, 2.0, act.mu1, act.mu2));
        z = z < 1.0 ? z * 1.1 : 1e-3;
    }
}
BENCHMARK(BM_SolveM1M2)->Unit(benchmark::kMicrosecond);

void BM_TauOfKappa(benchmark::State& state) {
    const auto s = center(make_activation("tanh"));
    const auto t = center(make_activation("softplus"));
    for (auto _ : state) benchmark::DoNotOptimize(tau_of_kappa(1.5, s, t));
}
BENCHMARK(BM_TauOfKappa)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
