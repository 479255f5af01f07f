#pragma once

#include "ptloop/dosing.hpp"
#include "ptloop/model.hpp"
#include "ptloop/state.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ptloop {

/**
 * @brief Tolerances and limits of the adaptive stiff solver.
 *
 * The solver is a one-step L-stable implicit scheme (trapezoidal stage
 * followed by a BDF2 stage over each step) with an embedded third-order error
 * estimate; the model is stiff (beta_S2 = 140 1/s next to rates ~1e-6 1/s),
 * so explicit methods are not an option.
 */
struct IntegratorConfig {
    double rtol = 1e-8;       ///< relative tolerance
    double atol = 1e-10;      ///< absolute tolerance per scaled component
    int max_steps = 200000;   ///< max accepted internal steps per call
    double initial_step = 60; ///< first trial step (s)

    /// @brief Throws std::invalid_argument on nonpositive tolerances/limits.
    void validate() const;

    /// @brief Copy with both tolerances scaled by @p factor (< 1 tightens).
    [[nodiscard]] IntegratorConfig scaled_tolerances(double factor) const;
};

/// @brief States on the uniform step grid t = t0 + k T_d.
struct Trajectory {
    Variant variant = Variant::hypo;
    std::vector<double> times;  ///< seconds, strictly increasing
    std::vector<Vec> states;

    [[nodiscard]] std::size_t size() const { return times.size(); }
    [[nodiscard]] PatientState state_at(std::size_t k) const;
};

/// @brief Internal step boundaries of one integration, for exact replay.
struct StepGrid {
    std::vector<double> times; ///< t0 = times.front(), t1 = times.back()
};

/// @brief Time-varying process noise for truth simulation.
using NoiseFunction = std::function<ProcessNoise(double)>;

/**
 * @brief Integrates the variant dynamics over [t0, t1].
 *
 * Splits the span at dose onsets (the only non-smooth instants of the RHS)
 * and controls the local error against cfg.rtol/cfg.atol with an RMS-weighted
 * norm.  The Jacobian is evaluated by finite differences with
 * component-relative perturbation 1e-7, once per step.
 *
 * Throws std::runtime_error (message includes the failing time) on step-size
 * underflow, non-finite states, or exceeding cfg.max_steps.
 *
 * @param grid  if non-null, receives every accepted step boundary.
 */
[[nodiscard]] PatientState integrate(const PatientState& x0, double t0, double t1,
                                     const InputSignals& u, const NoiseFunction& w,
                                     const ModelParameters& p, const IntegratorConfig& cfg,
                                     StepGrid* grid = nullptr);

/// @brief integrate with constant process noise.
[[nodiscard]] PatientState integrate(const PatientState& x0, double t0, double t1,
                                     const InputSignals& u, const ProcessNoise& w,
                                     const ModelParameters& p, const IntegratorConfig& cfg,
                                     StepGrid* grid = nullptr);

/**
 * @brief Discrete-time step map F: one T_d = 28800 s window starting at t0.
 *
 * The noise w is constant over the window (it is a per-step decision/
 * disturbance variable in the discrete-time system); the input signals are
 * evaluated in absolute time, so t0 selects the window.
 */
[[nodiscard]] PatientState step_map(const PatientState& x, const InputSignals& u,
                                    double t0, const ProcessNoise& w,
                                    const ModelParameters& p, const IntegratorConfig& cfg,
                                    StepGrid* grid = nullptr);

/**
 * @brief Re-runs the implicit scheme on a frozen step grid (no error control).
 *
 * Replaying the grid recorded by integrate/step_map with perturbed initial
 * state or noise yields a smooth map suitable for finite-difference
 * sensitivities; the implicit stage equations are solved to tight Newton
 * tolerance so the map is differentiable well below the perturbation size.
 * A grid span whose stage iteration fails to contract is bisected, so grids
 * recorded along a quiet reference still replay under strong excitation.
 */
[[nodiscard]] PatientState replay(const PatientState& x0, const InputSignals& u,
                                  const ProcessNoise& w, const ModelParameters& p,
                                  const StepGrid& grid);

/**
 * @brief Finite-difference sensitivities of one frozen-grid step map.
 *
 * Returns A = dF/dx (n x n) and B = dF/dw (n x nw) around (x, w), using
 * component-relative forward differences of size @p rel_step on replay.
 */
void step_sensitivities(const PatientState& x, const InputSignals& u,
                        const ProcessNoise& w, const ModelParameters& p,
                        const StepGrid& grid, double rel_step, Mat& A, Mat& B);

/// @brief Writes columns t_seconds, step_index, then one column per state.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

/// @brief Reads a trajectory written by write_trajectory_csv.
[[nodiscard]] Trajectory read_trajectory_csv(const std::string& path, Variant variant);

} // namespace ptloop
