#include "ptloop/scenario.hpp"

#include "ptloop/csv.hpp"
#include "ptloop/model.hpp"
#include "ptloop/sets.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace ptloop {

namespace {

/// First titration instant: the first nonzero d-scheme step, i.e. day 34.
constexpr long kFirstDecisionStep = 102;

/// Steps per day on the T_d grid (86400 / 28800).
constexpr long kStepsPerDay = static_cast<long>(kDaySeconds / kSampleSeconds);

Medication medication_of(Variant v) {
    return v == Variant::hypo ? Medication::lt4 : Medication::mmi;
}

} // namespace

void PatientSpec::validate() const {
    params.validate();
    if (x0.size() != state_dim(variant)) {
        throw std::invalid_argument("PatientSpec: x0 must have the state dimension");
    }
    if (duration_days < 1) {
        throw std::invalid_argument("PatientSpec: duration_days must be >= 1");
    }
    if (!(std::abs(w_gd1) <= 0.1) || !(std::abs(w_gt3) <= 0.1)) {
        throw std::invalid_argument("PatientSpec: w_gd1/w_gt3 must lie in [-0.1, 0.1]");
    }
    if (!(trh_amplitude >= 0.0) || !(trh_amplitude <= 0.3)) {
        throw std::invalid_argument("PatientSpec: trh_amplitude must lie in [0, 0.3]");
    }
    if (!(noise_scale >= 0.0) || !(noise_scale <= 1.0)) {
        throw std::invalid_argument("PatientSpec: noise_scale must lie in [0, 1]");
    }
    for (const int day : forgotten_days) {
        if (day < 0) {
            throw std::invalid_argument("PatientSpec: forgotten days must be nonnegative");
        }
    }
}

PatientSpec default_patient(Variant variant) {
    PatientSpec spec;
    spec.variant = variant;
    spec.params = default_parameters(variant);
    spec.forgotten_days = {39, 40, 41, 42, 43, 81, 82, 83, 84, 85};
    // Unmedicated baselines: steady states of the variant dynamics under the
    // constant patient mismatch w_GD1 = w_GT3 = 0.1 (300-day settling).
    if (variant == Variant::hypo) {
        spec.x0 = (Vec(6) << 0.4922390654158152, 0.18470864349976604, 0.9138703098092238,
                   0.17978276248744202, 5.114853898709598, 5.461933270407749)
                      .finished();
    } else {
        spec.x0 = (Vec(7) << 12.527926374577419, 4.700988855642882, 10.633935619196592,
                   4.2952722846603475, 0.8537989925369349, 0.9117353527447983, 0.0)
                      .finished();
    }
    return spec;
}

PatientSpec patient_spec_from_json(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("patient spec: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw std::invalid_argument("patient spec: expected a JSON object");
    }
    if (!doc.contains("variant")) {
        throw std::invalid_argument("patient spec: missing 'variant'");
    }
    PatientSpec spec = default_patient(variant_from_string(doc.at("variant").get<std::string>()));
    const int n = state_dim(spec.variant);

    for (const auto& [key, value] : doc.items()) {
        if (key == "variant") {
            continue;
        } else if (key == "w_gd1") {
            spec.w_gd1 = value.get<double>();
        } else if (key == "w_gt3") {
            spec.w_gt3 = value.get<double>();
        } else if (key == "trh_amplitude") {
            spec.trh_amplitude = value.get<double>();
        } else if (key == "noise_scale") {
            spec.noise_scale = value.get<double>();
        } else if (key == "duration_days") {
            spec.duration_days = value.get<int>();
        } else if (key == "forgotten_days") {
            if (!value.is_array()) {
                throw std::invalid_argument("patient spec: 'forgotten_days' must be an array");
            }
            spec.forgotten_days.clear();
            for (const auto& day : value) {
                spec.forgotten_days.push_back(day.get<int>());
            }
        } else if (key == "x0") {
            if (!value.is_array() || static_cast<int>(value.size()) != n) {
                throw std::invalid_argument("patient spec: 'x0' must be an array of " +
                                            std::to_string(n) + " numbers");
            }
            for (int i = 0; i < n; ++i) {
                spec.x0[i] = value[static_cast<std::size_t>(i)].get<double>();
            }
        } else if (key == "params") {
            if (!value.is_object()) {
                throw std::invalid_argument("patient spec: 'params' must be an object");
            }
            spec.params = apply_overrides_json(spec.params, value.dump());
        } else {
            throw std::invalid_argument("patient spec: unknown key '" + key + "'");
        }
    }
    spec.validate();
    return spec;
}

PatientSpec load_patient_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open patient spec '" + path + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return patient_spec_from_json(text.str());
}

std::string patient_spec_to_json(const PatientSpec& spec) {
    spec.validate();
    nlohmann::json doc;
    doc["variant"] = to_string(spec.variant);
    doc["w_gd1"] = spec.w_gd1;
    doc["w_gt3"] = spec.w_gt3;
    doc["trh_amplitude"] = spec.trh_amplitude;
    doc["noise_scale"] = spec.noise_scale;
    doc["forgotten_days"] = spec.forgotten_days;
    doc["x0"] = std::vector<double>(spec.x0.data(), spec.x0.data() + spec.x0.size());
    doc["duration_days"] = spec.duration_days;
    // Model parameters are not serialized; provide them as a "params"
    // override object when a non-default set is needed.
    return doc.dump(2) + "\n";
}

double circadian_w_trh(double t, double amplitude) {
    return amplitude * std::cos(std::numbers::pi * (t / 43200.0 - 5.0 / 12.0));
}

double hypo_protocol(double tsh_meas, ProtocolState& st) {
    if (st.first_decision) {
        st.first_decision = false;
        st.dose = tsh_meas > st.tsh_high ? st.start_dose : 0.0;
        return st.dose;
    }
    if (tsh_meas > st.tsh_high) {
        st.dose += st.adjustment;
    } else if (tsh_meas < st.tsh_low) {
        st.dose -= st.adjustment;
    }
    st.dose = std::clamp(st.dose, 0.0, max_daily_dose(Medication::lt4));
    return st.dose;
}

double hyper_protocol(double t4_meas, const ModelParameters& p, ProtocolState& st) {
    const double ft4 = ft4_pmol_from_t4(t4_meas, p);
    st.first_decision = false;
    if (ft4 > 54.0) {
        st.dose = 35.0;
    } else if (ft4 > 41.0) {
        st.dose = 15.0;
    } else if (ft4 >= 27.0) {
        st.dose = 7.5;
    } else {
        st.dose = 0.0;
    }
    return st.dose;
}

double ft4_pmol_from_t4(double t4_meas, const ModelParameters& p) {
    // T4 is carried in 1e-7 mol/l; the free fraction in mol/l is
    // 1e-7 T4 / (1 + K41 TBG + K42 TBPA), and 1 mol/l = 1e12 pmol/l.
    return t4_meas * 1e5 / (1.0 + p.K_41 * p.TBG + p.K_42 * p.TBPA);
}

double misreport_noise(double u_reported, double u_true) {
    if (u_reported <= 0.0) {
        return 0.0;
    }
    return 1.0 - u_true / u_reported;
}

TruthResult simulate_truth(const PatientSpec& spec, const IntegratorConfig& cfg,
                           SplitMix64& rng) {
    spec.validate();
    cfg.validate();
    const long n_steps = spec.duration_days * kStepsPerDay;
    const Medication kind = medication_of(spec.variant);

    TruthResult out;
    out.reported = DoseSchedule(kind);
    out.actual = DoseSchedule(kind);
    out.truth.variant = spec.variant;
    out.truth.times.reserve(static_cast<std::size_t>(n_steps) + 1);
    out.truth.states.reserve(static_cast<std::size_t>(n_steps) + 1);
    out.measurements.reserve(static_cast<std::size_t>(n_steps) + 1);

    // One measurement-noise draw per step, up front, so the realization does
    // not depend on the titration path and schemes can share it.
    const ConstraintSets sets = constraint_sets(spec.variant);
    std::vector<Eigen::Vector3d> noise(static_cast<std::size_t>(n_steps) + 1);
    for (auto& v : noise) {
        // Draw before scaling so noise_scale = 0 leaves the stream unchanged.
        v = spec.noise_scale * sets.V.sample(rng);
    }

    const SamplingSet decision_instants = realize(Scheme::d, 1, n_steps);

    // The truth runs on the actually-taken schedule, so its dose-misreport
    // noise is identically zero; hormone-side mismatches stay time-varying.
    const NoiseFunction w_truth = [&spec](double t) {
        Vec w = Vec::Zero(noise_dim(spec.variant));
        w[0] = spec.w_gd1;
        w[1] = spec.w_gt3;
        w[2] = circadian_w_trh(t, spec.trh_amplitude);
        return ProcessNoise(spec.variant, w);
    };

    std::vector<double> daily(static_cast<std::size_t>(spec.duration_days), 0.0);
    ProtocolState proto;

    const auto rebuild = [&]() {
        DoseSchedule reported(kind);
        for (int day = 0; day < spec.duration_days; ++day) {
            if (daily[static_cast<std::size_t>(day)] > 0.0) {
                reported.set(day, daily[static_cast<std::size_t>(day)]);
            }
        }
        DoseSchedule actual = reported;
        for (const int day : spec.forgotten_days) {
            actual = actual.with_skipped(day, day);
        }
        out.reported = std::move(reported);
        out.actual = std::move(actual);
        return make_input_signals(spec.params, nullptr,
                                  kind == Medication::lt4 ? &out.actual : nullptr,
                                  kind == Medication::mmi ? &out.actual : nullptr);
    };
    InputSignals signals = rebuild();

    PatientState x(spec.variant, spec.x0);
    for (long k = 0; k <= n_steps; ++k) {
        out.truth.times.push_back(static_cast<double>(k) * kSampleSeconds);
        out.truth.states.push_back(x.x);

        const Measurement meas = output(x, noise[static_cast<std::size_t>(k)]);
        out.measurements.push_back(meas);

        if (k >= kFirstDecisionStep && decision_instants.contains(k)) {
            DosingDecision log;
            log.step = k;
            if (spec.variant == Variant::hypo) {
                log.measured = meas.tsh_meas();
                log.dose = hypo_protocol(log.measured, proto);
            } else {
                log.measured = meas.t4_meas();
                log.ft4_pmol = ft4_pmol_from_t4(log.measured, spec.params);
                log.dose = hyper_protocol(log.measured, spec.params, proto);
            }
            out.decisions.push_back(log);
            for (long day = k / kStepsPerDay; day < spec.duration_days; ++day) {
                daily[static_cast<std::size_t>(day)] = log.dose;
            }
            signals = rebuild();
        }

        if (k < n_steps) {
            x = integrate(x, static_cast<double>(k) * kSampleSeconds,
                          static_cast<double>(k + 1) * kSampleSeconds, signals, w_truth,
                          spec.params, cfg);
        }
    }
    return out;
}

ErrorMetrics metrics(const Trajectory& truth, const std::vector<Vec>& estimates) {
    if (truth.size() != estimates.size()) {
        throw std::invalid_argument("metrics: truth and estimates differ in length");
    }
    if (truth.size() < 2) {
        throw std::invalid_argument("metrics: need at least two steps");
    }
    ErrorMetrics out;
    out.sae.reserve(truth.size());
    double cumulative = 0.0;
    double squares = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (estimates[i].size() != truth.states[i].size()) {
            throw std::invalid_argument("metrics: estimate dimension mismatch");
        }
        const Vec diff = estimates[i] - truth.states[i];
        cumulative += diff.lpNorm<1>();
        out.sae.push_back(cumulative);
        squares += diff.squaredNorm();
    }
    out.rmse = std::sqrt(squares / static_cast<double>(truth.size() - 1));
    return out;
}

RunResult run_virtual_patient(const PatientSpec& spec, const std::vector<Scheme>& schemes,
                              const EstimatorConfig& est_cfg, const IntegratorConfig& int_cfg,
                              std::uint64_t seed) {
    spec.validate();
    est_cfg.validate();
    require_same_variant(spec.variant, est_cfg.variant, "run_virtual_patient");

    const SplitMix64 root(seed);
    SplitMix64 truth_rng = root.split(0);

    RunResult out;
    out.truth = simulate_truth(spec, int_cfg, truth_rng);

    const long n_steps = spec.duration_days * kStepsPerDay;
    const Medication kind = medication_of(spec.variant);
    // The estimator only ever sees the reported schedule; the gap to the
    // actually-taken doses is what the w_LT4/w_MMI estimates must absorb.
    const InputSignals reported =
        make_input_signals(spec.params, nullptr,
                           kind == Medication::lt4 ? &out.truth.reported : nullptr,
                           kind == Medication::mmi ? &out.truth.reported : nullptr);

    for (const Scheme scheme : schemes) {
        SchemeResult res;
        res.scheme = scheme;
        const SamplingSet Ks = realize(scheme, 1, n_steps);
        std::map<long, Measurement> sampled;
        for (const long k : Ks.instants) {
            sampled.emplace(k, out.truth.measurements[static_cast<std::size_t>(k)]);
        }
        res.estimates = estimate_stream(Ks, sampled, reported, n_steps, est_cfg, spec.params);
        std::vector<Vec> estimates;
        estimates.reserve(res.estimates.size());
        for (const auto& e : res.estimates) {
            estimates.push_back(e.x);
        }
        res.errors = metrics(out.truth.truth, estimates);
        out.schemes.push_back(std::move(res));
    }
    return out;
}

void write_metrics_json(const std::string& path, const RunResult& run, Variant variant,
                        std::uint64_t seed) {
    nlohmann::json doc;
    doc["variant"] = to_string(variant);
    doc["seed"] = seed;
    doc["steps"] = run.truth.truth.size() - 1;
    nlohmann::json schemes = nlohmann::json::object();
    for (const auto& s : run.schemes) {
        nlohmann::json entry;
        entry["rmse"] = s.errors.rmse;
        entry["sae_final"] = s.errors.sae.empty() ? 0.0 : s.errors.sae.back();
        entry["sae"] = s.errors.sae;
        schemes[to_string(s.scheme)] = std::move(entry);
    }
    doc["schemes"] = std::move(schemes);
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write metrics file '" + path + "'");
    }
    out << doc.dump(2) << "\n";
}

void write_scheme_csv(const std::string& path, const SchemeResult& result) {
    if (result.estimates.size() != result.errors.sae.size()) {
        throw std::invalid_argument("write_scheme_csv: estimates and SAE differ in length");
    }
    csv::Table table;
    table.header = {"step", "solved_flag", "converged_flag", "cost", "max_violation"};
    const int n = result.estimates.empty() ? 0 : static_cast<int>(result.estimates.front().x.size());
    const char* names[] = {"t4_th", "t4", "t3p", "t3c", "tsh", "tshc", "mmi_th"};
    for (int i = 0; i < n; ++i) {
        table.header.emplace_back(names[i]);
    }
    table.header.emplace_back("sae");
    for (std::size_t i = 0; i < result.estimates.size(); ++i) {
        const EstimateStep& s = result.estimates[i];
        std::vector<double> row = {static_cast<double>(s.step), s.solved ? 1.0 : 0.0,
                                   s.converged ? 1.0 : 0.0, s.cost, s.max_violation};
        for (int j = 0; j < n; ++j) {
            row.push_back(s.x[j]);
        }
        row.push_back(result.errors.sae[i]);
        table.rows.push_back(std::move(row));
    }
    csv::write_table(path, table);
}

void write_decisions_csv(const std::string& path,
                         const std::vector<DosingDecision>& decisions) {
    csv::Table table;
    table.header = {"step", "day", "measured", "ft4_pmol", "dose"};
    for (const auto& d : decisions) {
        table.rows.push_back({static_cast<double>(d.step),
                              static_cast<double>(d.step / kStepsPerDay), d.measured, d.ft4_pmol,
                              d.dose});
    }
    csv::write_table(path, table);
}

void write_measurements_csv(const std::string& path,
                            const std::vector<Measurement>& measurements) {
    csv::Table table;
    table.header = {"step", "t4_meas", "t3p_meas", "tsh_meas", "v_t4", "v_t3p", "v_tsh"};
    for (std::size_t k = 0; k < measurements.size(); ++k) {
        const Measurement& m = measurements[k];
        table.rows.push_back({static_cast<double>(k), m.y[0], m.y[1], m.y[2], m.v[0], m.v[1],
                              m.v[2]});
    }
    csv::write_table(path, table);
}

} // namespace ptloop
