#pragma once

#include "ptloop/model.hpp"
#include "ptloop/parameters.hpp"

#include <string>
#include <vector>

namespace ptloop {

/// @brief Oral medication kind.
enum class Medication { lt3, lt4, mmi };

[[nodiscard]] std::string to_string(Medication m);
[[nodiscard]] Medication medication_from_string(const std::string& name);

/// @brief Largest admissible daily dose: 30 ug L-T3, 400 ug L-T4, 35 mg MMI.
[[nodiscard]] double max_daily_dose(Medication m);

/// @brief One daily dose: amount in ug (L-T3/L-T4) or mg (MMI), taken at
///        t = 86400 * day seconds.
struct Dose {
    int day = 0;
    double amount = 0.0;
};

/**
 * @brief Daily dose schedule for one medication.
 *
 * At most one dose per day; amounts are bounded by max_daily_dose.  Days are
 * kept sorted; amount 0 entries are allowed (explicit "no dose" days).
 */
class DoseSchedule {
public:
    explicit DoseSchedule(Medication kind) : kind_(kind) {}

    [[nodiscard]] Medication kind() const { return kind_; }
    [[nodiscard]] const std::vector<Dose>& doses() const { return doses_; }
    [[nodiscard]] bool empty() const { return doses_.empty(); }

    /**
     * @brief Adds (or replaces) the dose of one day.
     *
     * Throws std::invalid_argument for negative days, negative amounts, or
     * amounts above max_daily_dose(kind()).
     */
    void set(int day, double amount);

    /// @brief Dose amount of @p day (0 if none scheduled).
    [[nodiscard]] double amount_on(int day) const;

    /// @brief Same schedule with every dose in [first_day, last_day] zeroed.
    [[nodiscard]] DoseSchedule with_skipped(int first_day, int last_day) const;

    /// @brief Constant daily schedule over [first_day, last_day].
    [[nodiscard]] static DoseSchedule constant(Medication kind, int first_day,
                                               int last_day, double amount);

private:
    Medication kind_;
    std::vector<Dose> doses_;
};

/// @brief Reads schedules from CSV columns day_index, dose_amount, medication.
[[nodiscard]] std::vector<DoseSchedule> load_schedules_csv(const std::string& path);

/// @brief Writes schedules in the load_schedules_csv format.
void write_schedules_csv(const std::string& path,
                         const std::vector<DoseSchedule>& schedules);

/**
 * @brief Closed-form sum of double-exponential absorption pulses.
 *
 * Each dose contributes amplitude * (exp(-slow (t-t0)) - exp(-fast (t-t0)))
 * for t >= t0 and 0 before; the full signal is the superposition over doses.
 * Evaluation prunes pulses older than 30 days, whose contribution is below
 * exp(-76) of the pulse amplitude for every rate constant used here.
 */
class AbsorptionSignal {
public:
    struct Pulse {
        double onset = 0.0;     ///< seconds
        double amplitude = 0.0; ///< signal units
        double slow = 0.0;      ///< 1/s, slower decay rate
        double fast = 0.0;      ///< 1/s, faster decay rate
    };

    AbsorptionSignal() = default;
    explicit AbsorptionSignal(std::vector<Pulse> pulses);

    /// @brief Signal value at time @p t (seconds); 0 before the first onset.
    [[nodiscard]] double operator()(double t) const;

    [[nodiscard]] const std::vector<Pulse>& pulses() const { return pulses_; }

    /// @brief Pulse onset times inside the open interval (t0, t1).
    [[nodiscard]] std::vector<double> onsets_between(double t0, double t1) const;

    /// @brief Evaluation horizon after which a pulse is pruned (30 days).
    static constexpr double kPruneSeconds = 30.0 * kDaySeconds;

private:
    std::vector<Pulse> pulses_; ///< sorted by onset
};

/**
 * @brief Absorption-rate signal u_LT3 or u_LT4 (mol/l/s) of an L-T schedule.
 *
 * Doses m_i in ug are converted to mol via the molar mass; each pulse decays
 * with rates (k_2x + k_3x) and k_1x.  Throws std::invalid_argument for MMI
 * schedules.
 */
[[nodiscard]] AbsorptionSignal lt_signal(const DoseSchedule& s, const ModelParameters& p);

/**
 * @brief MMI plasma concentration MMI_Pl (mol/l) of an MMI schedule.
 *
 * Doses in mg; k_a and k_e are converted from 1/h to 1/s here, once, so the
 * signal is evaluated with t in seconds throughout.
 */
[[nodiscard]] AbsorptionSignal mmi_plasma(const DoseSchedule& s, const ModelParameters& p);

/// @brief Absorption rate into the thyroid:
///        u_MMI = alpha_M,th G_M,th MMI_Pl / (K_M,th + MMI_Pl).
[[nodiscard]] double mmi_absorption(double plasma_value, const ModelParameters& p);

/**
 * @brief Bundle of the medication signals driving one simulation.
 *
 * rates(t) packages u_LT3(t), u_LT4(t) and u_MMI(t) for rhs; unused
 * medications hold empty (identically zero) signals.
 */
struct InputSignals {
    AbsorptionSignal lt3;    ///< mol/l/s
    AbsorptionSignal lt4;    ///< mol/l/s
    AbsorptionSignal mmi_pl; ///< mol/l (plasma concentration)
    double mmi_gain = 0.0;   ///< alpha_M,th * G_M,th
    double mmi_km = 1.0;     ///< K_M,th

    [[nodiscard]] InputRates rates(double t) const;

    /// @brief Dose onset times of all three signals inside (t0, t1), sorted.
    [[nodiscard]] std::vector<double> onsets_between(double t0, double t1) const;
};

/// @brief Builds InputSignals from optional schedules (pass nullptr to omit).
[[nodiscard]] InputSignals make_input_signals(const ModelParameters& p,
                                              const DoseSchedule* lt3,
                                              const DoseSchedule* lt4,
                                              const DoseSchedule* mmi);

/**
 * @brief Restriction of a signal to [k T_d, (k+1) T_d] in local time:
 *        window(s, k)(tau) = s(k T_d + tau) for tau in [0, T_d].
 */
class WindowedSignal {
public:
    WindowedSignal(const AbsorptionSignal& base, long k, double period = kSampleSeconds);

    /// @brief Throws std::domain_error if tau is outside [0, period].
    [[nodiscard]] double operator()(double tau) const;

private:
    const AbsorptionSignal* base_;
    double offset_;
    double period_;
};

/// @brief window operation; see WindowedSignal.
[[nodiscard]] WindowedSignal window(const AbsorptionSignal& s, long k,
                                    double period = kSampleSeconds);

} // namespace ptloop
