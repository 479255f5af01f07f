// Hot-path timings.  The estimator spends nearly all of its time inside
// frozen-grid replays (one per finite-difference column per window step), so
// BM_ReplayStep is the number that matters when tuning solver budgets.

#include <benchmark/benchmark.h>

#include <ptloop/dosing.hpp>
#include <ptloop/integrator.hpp>
#include <ptloop/mhe.hpp>
#include <ptloop/model.hpp>
#include <ptloop/parameters.hpp>
#include <ptloop/rng.hpp>

#include <map>
#include <vector>

namespace {

using namespace ptloop;

Vec hypo_baseline() {
    Vec v(6);
    v << 0.4922390654158152, 0.18470864349976604, 0.9138703098092238, 0.17978276248744202,
        5.114853898709598, 5.461933270407749;
    return v;
}

void BM_Rhs(benchmark::State& state) {
    const ModelParameters p = default_parameters(Variant::hypo);
    const PatientState x{Variant::hypo, hypo_baseline()};
    InputRates u = InputRates::zero();
    u.u_lt4 = 3e-12;
    const ProcessNoise w = ProcessNoise::zero(Variant::hypo);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rhs(x, u, w, p));
    }
}
BENCHMARK(BM_Rhs);

void BM_StepMap(benchmark::State& state) {
    const ModelParameters p = default_parameters(Variant::hypo);
    const DoseSchedule lt4 = DoseSchedule::constant(Medication::lt4, 0, 2, 136.0);
    const InputSignals u = make_input_signals(p, nullptr, &lt4, nullptr);
    const PatientState x{Variant::hypo, hypo_baseline()};
    const ProcessNoise w = ProcessNoise::zero(Variant::hypo);
    const IntegratorConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(step_map(x, u, 0.0, w, p, cfg));
    }
}
BENCHMARK(BM_StepMap)->Unit(benchmark::kMillisecond);

void BM_ReplayStep(benchmark::State& state) {
    const ModelParameters p = default_parameters(Variant::hypo);
    const DoseSchedule lt4 = DoseSchedule::constant(Medication::lt4, 0, 2, 136.0);
    const InputSignals u = make_input_signals(p, nullptr, &lt4, nullptr);
    const PatientState x{Variant::hypo, hypo_baseline()};
    const ProcessNoise w = ProcessNoise::zero(Variant::hypo);
    StepGrid grid;
    const PatientState end =
        step_map(x, u, 0.0, w, p, IntegratorConfig{}.scaled_tolerances(0.1), &grid);
    benchmark::DoNotOptimize(end);
    for (auto _ : state) {
        benchmark::DoNotOptimize(replay(x, u, w, p, grid));
    }
}
BENCHMARK(BM_ReplayStep)->Unit(benchmark::kMillisecond);

void BM_SolveWindow(benchmark::State& state) {
    const ModelParameters p = default_parameters(Variant::hypo);
    const DoseSchedule lt4 = DoseSchedule::constant(Medication::lt4, 0, 6, 136.0);
    const InputSignals u = make_input_signals(p, nullptr, &lt4, nullptr);
    const IntegratorConfig tight = IntegratorConfig{}.scaled_tolerances(0.1);

    const long k = 10;
    std::vector<Vec> truth;
    PatientState x{Variant::hypo, hypo_baseline()};
    truth.push_back(x.x);
    for (long j = 0; j < k; ++j) {
        x = step_map(x, u, static_cast<double>(j) * kSampleSeconds,
                     ProcessNoise::zero(Variant::hypo), p, tight);
        truth.push_back(x.x);
    }

    MheWindow window;
    window.variant = Variant::hypo;
    window.k = k;
    window.m = static_cast<int>(k);
    window.inputs = &u;
    window.prior = truth.front();
    SplitMix64 rng(3);
    for (long j = 0; j <= k; ++j) {
        Measurement m = output(PatientState{Variant::hypo, truth[static_cast<std::size_t>(j)]});
        m.y[2] += rng.uniform(-0.15, 0.15); // noisy TSH channel
        window.measurements.emplace(j, m);
    }
    const EstimatorConfig cfg = default_estimator_config(Variant::hypo);

    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_window(window, cfg, p));
    }
}
BENCHMARK(BM_SolveWindow)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
