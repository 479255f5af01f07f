#pragma once

#include "ptloop/dosing.hpp"
#include "ptloop/integrator.hpp"
#include "ptloop/mhe.hpp"
#include "ptloop/rng.hpp"
#include "ptloop/sampling.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ptloop {

/**
 * @brief One virtual patient: constant parameter errors w_GD1 = w_GT3 = 0.1,
 *        a circadian TRH disturbance, and two forgotten-dose windows.
 */
struct PatientSpec {
    Variant variant = Variant::hypo;
    ModelParameters params;          ///< includes the variant's G_T,co
    double w_gd1 = 0.1;
    double w_gt3 = 0.1;
    double trh_amplitude = 0.3;      ///< w_TRH(t) = A cos(pi (t/43200 - 5/12))
    double noise_scale = 1.0;        ///< scales measurement-noise draws (0 disables)
    std::vector<int> forgotten_days; ///< days whose dose is silently skipped
    Vec x0;                          ///< true initial state
    int duration_days = 120;

    void validate() const;
};

/// @brief The default virtual patient: forgotten days 39-43 and 81-85,
///        truth started at the variant's unmedicated baseline.
[[nodiscard]] PatientSpec default_patient(Variant variant);

/// @brief Parses a PatientSpec from JSON (fields of default_patient overridable).
[[nodiscard]] PatientSpec patient_spec_from_json(const std::string& json_text);
[[nodiscard]] PatientSpec load_patient_spec(const std::string& path);
[[nodiscard]] std::string patient_spec_to_json(const PatientSpec& spec);

/// @brief Circadian TRH disturbance w_TRH(t) = amplitude cos(pi (t/43200 - 5/12)).
[[nodiscard]] double circadian_w_trh(double t, double amplitude = 0.3);

/// @brief Dose-titration bookkeeping between decision instants.
struct ProtocolState {
    double dose = 0.0;          ///< current prescribed daily dose (ug or mg)
    bool first_decision = true; ///< hypo: the day-34 start decision
    // Hypo: start 136 ug/day if TSH above band, adjust by 18.75 toward
    // the 0.5-4 mIU/l target, floor 0, cap 400.
    double tsh_low = 0.5;
    double tsh_high = 4.0;
    double start_dose = 136.0;
    double adjustment = 18.75;
};

/**
 * @brief L-T4 titration: first decision starts 136 ug/day when TSH_meas > 4;
 *        later decisions step the dose by 18.75 ug/day toward the 0.5-4 mIU/l
 *        band (floored at 0, capped at 400).  Returns the updated daily dose.
 */
double hypo_protocol(double tsh_meas, ProtocolState& st);

/**
 * @brief MMI titration from the measured T4: FT4 in pmol/l sets the dose to
 *        35 (> 54), 15 (41-54), 7.5 (27-41) or 0 (< 27) mg/day.
 */
double hyper_protocol(double t4_meas, const ModelParameters& p, ProtocolState& st);

/// @brief FT4 in pmol/l corresponding to a measured T4 (1e-7 mol/l units).
[[nodiscard]] double ft4_pmol_from_t4(double t4_meas, const ModelParameters& p);

/**
 * @brief Misreported-dose noise: w = 1 - u_true/u_reported when the reported
 *        rate is positive, else 0, so that u_reported (1 - w) = u_true.
 */
[[nodiscard]] double misreport_noise(double u_reported, double u_true);

/// @brief One titration decision, for the dosing log.
struct DosingDecision {
    long step = 0;          ///< decision instant (T_d steps)
    double measured = 0.0;  ///< TSH_meas (hypo) or T4_meas (hyper)
    double ft4_pmol = 0.0;  ///< hyper only
    double dose = 0.0;      ///< daily dose prescribed from this day on
};

/**
 * @brief Ground truth of one run: trajectory on the step grid, schedules as
 *        reported vs actually taken, titration log, and the full
 *        measurement-noise realization (one Measurement per step).
 */
struct TruthResult {
    Trajectory truth;
    DoseSchedule reported;  ///< what the patient says they take
    DoseSchedule actual;    ///< reported minus the forgotten days
    std::vector<DosingDecision> decisions;
    std::vector<Measurement> measurements; ///< index = step, 0..T

    TruthResult() : reported(Medication::lt4), actual(Medication::lt4) {}
};

/**
 * @brief Simulates the titrated truth.
 *
 * The truth integrates with time-varying noise (constant w_GD1/w_GT3, the
 * circadian w_TRH) under the actually-taken doses; titration decisions happen
 * at the sparse decision instants (the d-scheme instants from step 102 = day
 * 34 on) and consume the noisy measurement drawn for that step.  The
 * measurement-noise realization covers every step so estimator schemes can
 * sub-sample one shared sequence.
 */
[[nodiscard]] TruthResult simulate_truth(const PatientSpec& spec,
                                         const IntegratorConfig& cfg, SplitMix64& rng);

/// @brief SAE series SAE(k) = sum_{i<=k} |x^_i - x_i|_1 and
///        RMSE = sqrt(mean_i |x^_i - x_i|_2^2) over all steps i = 0..T.
struct ErrorMetrics {
    std::vector<double> sae;
    double rmse = 0.0;
};

/// @brief Computes ErrorMetrics; throws std::invalid_argument on length mismatch.
[[nodiscard]] ErrorMetrics metrics(const Trajectory& truth, const std::vector<Vec>& estimates);

/// @brief Estimates and errors of one sampling scheme.
struct SchemeResult {
    Scheme scheme = Scheme::a;
    std::vector<EstimateStep> estimates;
    ErrorMetrics errors;
};

/// @brief Truth plus the per-scheme estimation results of one run.
struct RunResult {
    TruthResult truth;
    std::vector<SchemeResult> schemes;
};

/**
 * @brief Full closed-loop run: one titrated truth, one measurement-noise
 *        realization, then estimate_stream per requested scheme on the
 *        sub-sampled measurements and the *reported* input signals.
 *
 * Deterministic in (spec, seed, cfg); the truth and the noise realization are
 * identical whatever subset of schemes is requested.
 */
[[nodiscard]] RunResult run_virtual_patient(const PatientSpec& spec,
                                            const std::vector<Scheme>& schemes,
                                            const EstimatorConfig& est_cfg,
                                            const IntegratorConfig& int_cfg,
                                            std::uint64_t seed);

/// @brief Writes {variant, seed, scheme -> rmse, sae paths} to JSON.
void write_metrics_json(const std::string& path, const RunResult& run,
                        Variant variant, std::uint64_t seed);

/// @brief Per-scheme estimates CSV plus SAE column.
void write_scheme_csv(const std::string& path, const SchemeResult& result);

/// @brief Decision log CSV: step, day, measured, ft4_pmol, dose.
void write_decisions_csv(const std::string& path,
                         const std::vector<DosingDecision>& decisions);

/// @brief Measurement log CSV: step, t4_meas, t3p_meas, tsh_meas, v columns.
void write_measurements_csv(const std::string& path,
                            const std::vector<Measurement>& measurements);

} // namespace ptloop
