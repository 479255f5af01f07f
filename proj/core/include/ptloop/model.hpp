#pragma once

#include "ptloop/parameters.hpp"
#include "ptloop/state.hpp"

#include <optional>

namespace ptloop {

/**
 * @brief Instantaneous medication absorption rates (mol/l/s).
 *
 * For the hypo variant u_LT3/u_LT4 drive the T3p/T4 pools; for the hyper
 * variant u_MMI drives the thyroidal MMI pool.  Rates must be nonnegative.
 */
struct InputRates {
    double u_lt3 = 0.0;
    double u_lt4 = 0.0;
    double u_mmi = 0.0;

    static InputRates zero() { return {}; }
};

/// @brief Algebraic hormone quantities derived from a state (all in mol/l).
struct DerivedQuantities {
    double ft4 = 0.0; ///< free T4
    double ft3 = 0.0; ///< free T3
    double t3n = 0.0; ///< free central T3
    std::optional<double> tpo_a; ///< TPO activity factor; hyper states only
};

/**
 * @brief Free-hormone fractions and (for hyper states) the TPO activity.
 *
 * FT4 = 1e-7 T4 / (1 + K41 TBG + K42 TBPA), FT3 = 1e-9 T3p / (1 + K30 TBG),
 * T3N = 1e-8 T3c / (1 + K31 IBS).
 */
[[nodiscard]] DerivedQuantities derived_quantities(const PatientState& x,
                                                   const ModelParameters& p);

/**
 * @brief TPO activity factor in (0, c0], monotone decreasing in MMI_th.
 *
 * tpo_a = c0 / (1 + exp(-c1 (-(1e-5 MMI_th)^{1/c2} + c3))).
 */
[[nodiscard]] double tpo_activity(double mmi_th, const ModelParameters& p);

/// @brief tpo_activity for a state; throws std::invalid_argument for hypo states.
[[nodiscard]] double tpo_activity(const PatientState& x, const ModelParameters& p);

/**
 * @brief Continuous-time right-hand side of the loop dynamics.
 *
 * Evaluates f(x, u, w) for the variant of @p x, including the noise
 * multipliers (1 + w_GD1), (1 + w_GT3), (1 + w_TRH) on the respective gains
 * and (1 - w_LT3), (1 - w_LT4) or (1 - w_MMI) on the medication inputs.
 *
 * Throws std::invalid_argument on variant mismatch or negative input rates.
 */
[[nodiscard]] Vec rhs(const PatientState& x, const InputRates& u,
                      const ProcessNoise& w, const ModelParameters& p);

/// @brief Measurement map h(x, v) = (T4 + v1, T3p + v2, TSH + v3).
[[nodiscard]] Measurement output(const PatientState& x,
                                 const Eigen::Vector3d& v = Eigen::Vector3d::Zero());

} // namespace ptloop
