// Stiff-integrator tests: frozen one-step references (computed with an
// independent high-order solver at rtol 1e-12), flow properties, frozen-grid
// replay and the finite-difference step sensitivities.

#include <catch2/catch_amalgamated.hpp>

#include "ptloop/dosing.hpp"
#include "ptloop/integrator.hpp"
#include "ptloop/parameters.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

using namespace ptloop;
using Catch::Approx;

namespace {

Vec vec6(double a, double b, double c, double d, double e, double f) {
    Vec v(6);
    v << a, b, c, d, e, f;
    return v;
}

Vec vec7(double a, double b, double c, double d, double e, double f, double g) {
    Vec v(7);
    v << a, b, c, d, e, f, g;
    return v;
}

ProcessNoise noise(Variant v, std::initializer_list<double> values) {
    ProcessNoise w = ProcessNoise::zero(v);
    int i = 0;
    for (double value : values) w.w[i++] = value;
    return w;
}

void check_close(const Vec& got, const Vec& expected, double rel) {
    REQUIRE(got.size() == expected.size());
    for (int i = 0; i < got.size(); ++i) {
        CAPTURE(i);
        CHECK(got[i] == Approx(expected[i]).epsilon(rel));
    }
}

} // namespace

TEST_CASE("one-step references: undriven hypo window", "[integrator][reference]") {
    const ModelParameters p = default_parameters(Variant::hypo);
    const PatientState x0{Variant::hypo, vec6(0.2, 1.5, 3.0, 1.5, 2.0, 2.0)};
    const PatientState x1 = step_map(x0, InputSignals{}, 0.0,
                                     ProcessNoise::zero(Variant::hypo), p, IntegratorConfig{});
    check_close(x1.x,
                vec6(0.2903491289214756, 1.4566731006960096, 3.006502201763941,
                     1.3939074129172142, 1.6394378347577578, 1.7544665715234387),
                1e-5);
}

TEST_CASE("one-step references: medicated hypo window with noise", "[integrator][reference]") {
    const ModelParameters p = default_parameters(Variant::hypo);
    DoseSchedule lt4(Medication::lt4);
    lt4.set(0, 136.0);
    const InputSignals u = make_input_signals(p, nullptr, &lt4, nullptr);
    const ProcessNoise w = noise(Variant::hypo, {0.1, 0.1, 0.3, 0.0, 0.0});

    const PatientState x0{Variant::hypo, vec6(0.49, 0.18, 0.92, 0.18, 5.14, 5.48)};
    const PatientState x1 = step_map(x0, u, 0.0, w, p, IntegratorConfig{});
    const Vec expected1 = vec6(0.4821469896342086, 0.2734598997134122, 0.9390031748215917,
                               0.26330693056550436, 4.8151036599579555, 5.012228849289495);
    check_close(x1.x, expected1, 1e-5);

    // Second window, continued from the frozen reference state.
    const PatientState x2 = step_map({Variant::hypo, expected1}, u, kSampleSeconds, w, p,
                                     IntegratorConfig{});
    check_close(x2.x,
                vec6(0.469062953958743, 0.29979200778469045, 0.9742024225282702,
                     0.2909727492195145, 4.459192505345524, 4.744850097633397),
                1e-5);
}

TEST_CASE("one-step references: medicated hyper window with noise", "[integrator][reference]") {
    const ModelParameters p = default_parameters(Variant::hyper);
    DoseSchedule mmi(Medication::mmi);
    mmi.set(0, 35.0);
    const InputSignals u = make_input_signals(p, nullptr, nullptr, &mmi);
    const ProcessNoise w = noise(Variant::hyper, {0.1, 0.1, -0.3, 0.5});

    const PatientState x0{Variant::hyper, vec7(7.0, 3.0, 7.0, 2.0, 2.0, 2.5, 1.0)};
    const PatientState x1 = step_map(x0, u, 0.0, w, p, IntegratorConfig{});
    check_close(x1.x,
                vec7(10.522418882979354, 3.048035006692153, 7.061438631640437,
                     2.8477816783694645, 0.9014569321201742, 0.96013849029729,
                     1.117826216585382),
                1e-5);
}

TEST_CASE("flow semigroup: two windows equal one double-length span", "[integrator][flow]") {
    const ModelParameters p = default_parameters(Variant::hypo);
    DoseSchedule lt4(Medication::lt4);
    lt4.set(0, 136.0);
    const InputSignals u = make_input_signals(p, nullptr, &lt4, nullptr);
    const ProcessNoise w = noise(Variant::hypo, {0.1, 0.1, 0.3, 0.0, 0.0});
    const PatientState x0{Variant::hypo, vec6(0.49, 0.18, 0.92, 0.18, 5.14, 5.48)};

    const PatientState two_steps =
        step_map(step_map(x0, u, 0.0, w, p, IntegratorConfig{}), u, kSampleSeconds, w, p,
                 IntegratorConfig{});
    const PatientState direct =
        integrate(x0, 0.0, 2.0 * kSampleSeconds, u, w, p, IntegratorConfig{});
    check_close(direct.x, two_steps.x, 1e-6);
}

TEST_CASE("integration is deterministic", "[integrator][determinism]") {
    const ModelParameters p = default_parameters(Variant::hypo);
    const PatientState x0{Variant::hypo, vec6(0.2, 1.5, 3.0, 1.5, 2.0, 2.0)};
    const PatientState a = step_map(x0, InputSignals{}, 0.0,
                                    ProcessNoise::zero(Variant::hypo), p, IntegratorConfig{});
    const PatientState b = step_map(x0, InputSignals{}, 0.0,
                                    ProcessNoise::zero(Variant::hypo), p, IntegratorConfig{});
    CHECK((a.x.array() == b.x.array()).all()); // bit identical
}

TEST_CASE("initial step size does not change the answer", "[integrator][adaptivity]") {
    const ModelParameters p = default_parameters(Variant::hypo);
    const PatientState x0{Variant::hypo, vec6(0.49, 0.18, 0.92, 0.18, 5.14, 5.48)};

    IntegratorConfig coarse_start;
    coarse_start.initial_step = 600.0;
    const PatientState a = step_map(x0, InputSignals{}, 0.0,
                                    ProcessNoise::zero(Variant::hypo), p, IntegratorConfig{});
    const PatientState b = step_map(x0, InputSignals{}, 0.0,
                                    ProcessNoise::zero(Variant::hypo), p, coarse_start);
    check_close(a.x, b.x, 1e-6);
}

TEST_CASE("frozen-grid replay reproduces the recorded step", "[integrator][replay]") {
    const ModelParameters p = default_parameters(Variant::hypo);
    DoseSchedule lt4(Medication::lt4);
    lt4.set(0, 136.0);
    const InputSignals u = make_input_signals(p, nullptr, &lt4, nullptr);
    const ProcessNoise w = noise(Variant::hypo, {0.1, 0.1, 0.3, 0.0, 0.0});
    const PatientState x0{Variant::hypo, vec6(0.49, 0.18, 0.92, 0.18, 5.14, 5.48)};

    StepGrid grid;
    const PatientState adaptive = step_map(x0, u, 0.0, w, p, IntegratorConfig{}, &grid);
    REQUIRE(grid.times.size() >= 2);
    CHECK(grid.times.front() == 0.0);
    CHECK(grid.times.back() == kSampleSeconds);

    const PatientState replayed = replay(x0, u, w, p, grid);
    check_close(replayed.x, adaptive.x, 1e-7);
}

TEST_CASE("replay survives strong excitation on a quiet grid", "[integrator][replay]") {
    // Warm starts replay grids recorded along a *zero-noise* reference.  A
    // grid step that is huge on the quiet trajectory can be impossible for
    // the stage iteration once strong TRH excitation is switched on; the
    // replay must bisect such spans instead of failing.
    const ModelParameters p = default_parameters(Variant::hypo);
    const PatientState x0{Variant::hypo, vec6(0.2, 1.5, 3.0, 1.5, 2.0, 2.0)};

    StepGrid quiet_grid;
    (void)step_map(x0, InputSignals{}, 0.0, ProcessNoise::zero(Variant::hypo), p,
                   IntegratorConfig{}.scaled_tolerances(0.1), &quiet_grid);

    const ProcessNoise w = noise(Variant::hypo, {0.0, 0.0, 0.3, 0.0, 0.0});
    PatientState replayed{Variant::hypo, Vec::Zero(6)};
    REQUIRE_NOTHROW(replayed = replay(x0, InputSignals{}, w, p, quiet_grid));

    const PatientState adaptive =
        step_map(x0, InputSignals{}, 0.0, w, p, IntegratorConfig{});
    check_close(replayed.x, adaptive.x, 5e-2);
}

TEST_CASE("step sensitivities agree with direct finite differences",
          "[integrator][gradient]") {
    const ModelParameters p = default_parameters(Variant::hypo);
    DoseSchedule lt4(Medication::lt4);
    lt4.set(0, 136.0);
    const InputSignals u = make_input_signals(p, nullptr, &lt4, nullptr);
    const ProcessNoise w = noise(Variant::hypo, {0.05, -0.05, 0.1, 0.0, 0.2});
    const PatientState x{Variant::hypo, vec6(0.49, 0.18, 0.92, 0.18, 5.14, 5.48)};

    StepGrid grid;
    (void)step_map(x, u, 0.0, w, p, IntegratorConfig{}.scaled_tolerances(0.1), &grid);

    Mat A, B;
    step_sensitivities(x, u, w, p, grid, 1e-6, A, B);
    REQUIRE(A.rows() == 6);
    REQUIRE(A.cols() == 6);
    REQUIRE(B.cols() == 5);

    // Independent forward differences on the same replay map, with a
    // different perturbation size.
    const Vec base = replay(x, u, w, p, grid).x;
    for (int j = 0; j < 6; ++j) {
        const double h = 4e-7 * std::max(std::abs(x.x[j]), 1e-2);
        Vec xp = x.x;
        xp[j] += h;
        const Vec col = (replay({Variant::hypo, xp}, u, w, p, grid).x - base) / h;
        for (int i = 0; i < 6; ++i) {
            CAPTURE(i, j);
            const double scale = std::max(std::abs(col[i]), 1e-6);
            CHECK(std::abs(A(i, j) - col[i]) <= 1e-4 * scale);
        }
    }
    for (int j = 0; j < 5; ++j) {
        const double h = 4e-7 * std::max(std::abs(w.w[j]), 1e-2);
        ProcessNoise wp = w;
        wp.w[j] += h;
        const Vec col = (replay(x, u, wp, p, grid).x - base) / h;
        for (int i = 0; i < 6; ++i) {
            CAPTURE(i, j);
            const double scale = std::max(std::abs(col[i]), 1e-6);
            CHECK(std::abs(B(i, j) - col[i]) <= 1e-4 * scale);
        }
    }
}

TEST_CASE("configuration validation and failure reporting", "[integrator][errors]") {
    IntegratorConfig bad;
    bad.rtol = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = IntegratorConfig{};
    bad.max_steps = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    IntegratorConfig scaled = IntegratorConfig{}.scaled_tolerances(0.1);
    CHECK(scaled.rtol == Approx(1e-9));
    CHECK(scaled.atol == Approx(1e-11));

    // Exhausting max_steps raises with the failing time in the message.
    const ModelParameters p = default_parameters(Variant::hypo);
    const PatientState x0{Variant::hypo, vec6(0.49, 0.18, 0.92, 0.18, 5.14, 5.48)};
    IntegratorConfig tiny;
    tiny.max_steps = 2;
    CHECK_THROWS_AS(step_map(x0, InputSignals{}, 0.0, ProcessNoise::zero(Variant::hypo), p,
                             tiny),
                    std::runtime_error);
}

TEST_CASE("trajectory CSV round trip", "[integrator][io]") {
    const ModelParameters p = default_parameters(Variant::hypo);
    const IntegratorConfig cfg;
    Trajectory traj;
    traj.variant = Variant::hypo;
    PatientState x{Variant::hypo, vec6(0.49, 0.18, 0.92, 0.18, 5.14, 5.48)};
    for (int k = 0; k <= 3; ++k) {
        traj.times.push_back(k * kSampleSeconds);
        traj.states.push_back(x.x);
        x = step_map(x, InputSignals{}, k * kSampleSeconds, ProcessNoise::zero(Variant::hypo),
                     p, cfg);
    }

    const std::string path = "integrator_test_traj.csv";
    write_trajectory_csv(path, traj);
    const Trajectory loaded = read_trajectory_csv(path, Variant::hypo);
    std::remove(path.c_str());

    REQUIRE(loaded.size() == traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        CHECK(loaded.times[k] == traj.times[k]);
        // The 17-significant-digit format round-trips doubles exactly.
        CHECK((loaded.states[k].array() == traj.states[k].array()).all());
    }
    CHECK(loaded.state_at(2).variant == Variant::hypo);
    CHECK((loaded.state_at(2).x.array() == traj.states[2].array()).all());
}
