#pragma once

#include "ptloop/integrator.hpp"
#include "ptloop/sampling.hpp"
#include "ptloop/sets.hpp"
#include "ptloop/state.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace ptloop {

/// @brief Iteration limits and tolerances of the window solver.
struct SolverSettings {
    int max_iterations = 15;
    double gradient_tolerance = 2e-4; ///< projected-gradient test, scaled by 1 + |J|
    double cost_tolerance = 1e-7;     ///< relative cost-decrease stop
    double penalty_weight = 1e6;      ///< exterior quadratic penalty for X and Y
    double fd_step = 1e-6;            ///< relative FD step for rollout sensitivities
    double initial_lambda = 1e-3;     ///< Levenberg-Marquardt damping seed

    void validate() const;
};

/**
 * @brief Weights and horizon of the moving horizon estimator.
 *
 * Q weighs the stacked noise omega = (w, v) (dim noise_dim + 3); eta is the
 * geometric discount on older residuals; prior is the initial guess chi used
 * before the first solve (it may lie outside X on purpose).
 */
struct EstimatorConfig {
    Variant variant = Variant::hypo;
    Eigen::VectorXd P_diag; ///< prior weight, state-dim
    Eigen::VectorXd Q_diag; ///< stacked-noise weight, noise_dim + 3
    Eigen::Vector3d R_diag; ///< output-residual weight
    double eta = 0.7;       ///< discount, in [0, 1)
    int horizon = 20;       ///< M >= 1
    Eigen::VectorXd prior;  ///< chi, state-dim
    SolverSettings solver;
    IntegratorConfig integrator; ///< tolerances are tightened 10x inside solves

    void validate() const;
};

/**
 * @brief Hand-tuned estimator weights for @p variant.
 *
 * Hypo: P = diag(1, 0.1, 1, 1, 1, 1), Q = diag(10, 1, 1, 0, 1, 1e3, 1e3, 100),
 * R = diag(500, 500, 100), eta = 0.7, M = 20, chi = (0.2, 1.5, 3, 1.5, 2, 2).
 * Hyper: P = diag(100, 0.1, 1, 1, 1, 1, 100), Q = diag(10, 1, 1, 10, 1e3, 1e3,
 * 100), R = diag(250, 250, 1e3), eta = 0.8, M = 20, chi = (7, 3, 7, 2, 2, 2.5, 1).
 */
[[nodiscard]] EstimatorConfig default_estimator_config(Variant variant);

/// @brief Parses an EstimatorConfig from JSON (see estimator_config_to_json).
[[nodiscard]] EstimatorConfig estimator_config_from_json(const std::string& json_text);

/// @brief Reads estimator_config_from_json from a file.
[[nodiscard]] EstimatorConfig load_estimator_config(const std::string& path);

/// @brief Serializes the config (matrix diagonals, eta, M, chi, solver settings).
[[nodiscard]] std::string estimator_config_to_json(const EstimatorConfig& cfg);

/**
 * @brief One estimation window anchored at step k.
 *
 * m = M_k = min(k, M); measurements hold y_j for the sampled
 * j in [k - m, k]; prior is x~_{k-m} (the filtering-form chain: the estimate
 * published at step k - m, or chi when k - m = 0 and nothing was published).
 */
struct MheWindow {
    Variant variant = Variant::hypo;
    long k = 0;
    int m = 0;
    const InputSignals* inputs = nullptr; ///< absolute-time dose signals
    std::map<long, Measurement> measurements;
    Vec prior;
};

/// @brief Result of one window solve.
struct MheSolution {
    bool solved = false;      ///< NLP attempted and produced an iterate
    bool converged = false;   ///< stationarity or cost-decrease test met
    int iterations = 0;
    double cost = 0.0;          ///< objective J at the solution (penalties excluded)
    double max_violation = 0.0; ///< worst X/Y box violation along the rollout
    long k = 0;                 ///< anchor step
    long k_start = 0;           ///< k - M_k
    Vec x0;                          ///< estimate of x_{k_start}
    std::map<long, Vec> w_hat;       ///< process noise per window step (zero at k)
    std::map<long, Eigen::Vector3d> v_hat; ///< measurement noise at sampled steps
    std::vector<Vec> states;         ///< rollout x_{k_start..k}, regenerated via step_map
    Vec estimate;                    ///< filtered estimate x^_k = states.back()
};

/**
 * @brief Objective of the window NLP at a decision (x0, {w_j}, {v_j}):
 *
 *   J = 2 eta^m |x0 - prior|^2_P
 *     + sum_{j=k-m}^{k} eta^{k-j} 2 |omega_j|^2_Q
 *     + sum_{sampled j} eta^{k-j} |h(x_j) + v_j - y_j|^2_R,
 *
 * where the x_j are the rollout of x0 under {w_j}.  Exposed for tests; the
 * solver minimizes this plus the exterior X/Y penalties.
 */
[[nodiscard]] double mhe_cost(const MheWindow& window, const EstimatorConfig& cfg,
                              const ModelParameters& p, const Vec& x0,
                              const std::vector<Vec>& w,
                              const std::map<long, Eigen::Vector3d>& v);

/**
 * @brief Solves one window NLP by projected Levenberg-Marquardt.
 *
 * Single shooting on the decision (x0, {w_j}, {v_j}); w/v box constraints
 * enforced by projection, X and Y by exterior quadratic penalty
 * (weight solver.penalty_weight).  Rollout derivatives come from per-step
 * finite-difference sensitivities on a frozen integration grid.  Never
 * throws for iteration-limit exhaustion (flagged via converged = false);
 * throws std::runtime_error if the rollout itself fails to integrate.
 */
[[nodiscard]] MheSolution solve_window(const MheWindow& window, const EstimatorConfig& cfg,
                                       const ModelParameters& p,
                                       const MheSolution* warm = nullptr);

/// @brief Per-step output of estimate_stream.
struct EstimateStep {
    long step = 0;
    bool solved = false;    ///< true if an NLP ran at this step
    bool converged = false; ///< convergence flag of that NLP (false otherwise)
    double cost = 0.0;
    double max_violation = 0.0;
    Vec x; ///< published estimate x^_k
};

/**
 * @brief Filtering-form estimation over steps 0..n_steps.
 *
 * At k in K_s the window NLP is solved (horizon M_k = min(k, M)); at other
 * steps the estimate propagates open loop, x^_k = F(x^_{k-1}, u, 0), from
 * chi at k = 0.  A failed window falls back to open-loop prediction and is
 * flagged; the stream never aborts.
 */
[[nodiscard]] std::vector<EstimateStep> estimate_stream(
    const SamplingSet& Ks, const std::map<long, Measurement>& measurements,
    const InputSignals& inputs, long n_steps, const EstimatorConfig& cfg,
    const ModelParameters& p);

/// @brief Columns: step, solved_flag, converged_flag, cost, max_violation, states.
void write_estimates_csv(const std::string& path, const std::vector<EstimateStep>& steps);

namespace detail {

/**
 * @brief Internals of one window solve, exposed for derivative tests.
 *
 * The decision vector z stacks x0 (state-dim), then w_j for window steps
 * k-m..k-1 (free components only: the terminal w_k and, for hypo, every
 * w_LT3 entry are pinned to zero and excluded), then v_j (3 each) for the
 * sampled j.
 * objective() evaluates the penalized cost on the frozen step grid;
 * gradient() returns its derivative from chained per-step sensitivities.
 */
class WindowSolver {
public:
    WindowSolver(const MheWindow& window, const EstimatorConfig& cfg,
                 const ModelParameters& p);
    ~WindowSolver();

    WindowSolver(const WindowSolver&) = delete;
    WindowSolver& operator=(const WindowSolver&) = delete;

    [[nodiscard]] int decision_dim() const;
    [[nodiscard]] Eigen::VectorXd cold_start() const; ///< prior + zero noise

    /// @brief Maps a previous window's solution onto this layout (by absolute
    ///        step; non-overlapping entries fall back to the cold start).
    [[nodiscard]] Eigen::VectorXd pack_warm_start(const MheSolution& previous) const;
    [[nodiscard]] Eigen::VectorXd project(const Eigen::VectorXd& z) const;
    [[nodiscard]] double objective(const Eigen::VectorXd& z) const;
    [[nodiscard]] Eigen::VectorXd gradient(const Eigen::VectorXd& z) const;
    [[nodiscard]] MheSolution solve(const Eigen::VectorXd* warm_start = nullptr);
    [[nodiscard]] const Eigen::VectorXd& solution_point() const; ///< z of last solve()

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace detail

} // namespace ptloop
