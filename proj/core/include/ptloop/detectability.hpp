#pragma once

#include "ptloop/integrator.hpp"
#include "ptloop/rng.hpp"
#include "ptloop/sampling.hpp"
#include "ptloop/sets.hpp"
#include "ptloop/state.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ptloop {

/**
 * @brief Candidate certificate for sample-based exponential i-IOSS.
 *
 * The dissipation inequality checked for a trajectory pair (x, omega, y),
 * (x~, omega~, y~) under sampling set K is, for every step k,
 *
 *   |x_k - x~_k|^2_P1  <=  |x_0 - x~_0|^2_P2 eta^k
 *                        + sum_{j=0}^{k-1} eta^{k-j-1} |omega_j - omega~_j|^2_Q
 *                        + sum_{j in [0,k-1] cap K} eta^{k-j-1} |y_j - y~_j|^2_R,
 *
 * with omega = (w, v) the stacked process/measurement noise.
 */
struct IossCertificate {
    Eigen::MatrixXd P1;   ///< state-dim, positive definite
    Eigen::MatrixXd P2;   ///< state-dim, positive definite
    Eigen::MatrixXd Qbar; ///< stacked-noise-dim (noise_dim + 3), PSD
    Eigen::Matrix3d Rbar; ///< output weight, PSD
    double eta = 0.95;    ///< discount, in [0, 1)

    /// @brief Throws std::invalid_argument on dimension or definiteness failure.
    void validate(Variant variant) const;
};

/**
 * @brief The verified certificate of @p variant for @p scheme.
 *
 * Hypo: P1 = I6, P2 = 2e3 I6, eta = 0.95, Q = 0.5 I8 and R = r I3 with
 * r = 0.5 / 5e2 / 5e3 / 1e5 for schemes a-d.  Hyper: P1 = I7, P2 = 2e3 I7,
 * eta = 0.96, Q = 5 I7, r = 20 / 3e3 / 5e4 / 2e6.
 */
[[nodiscard]] IossCertificate default_certificate(Variant variant, Scheme scheme);

/**
 * @brief Two state/noise/output trajectories under one shared input signal.
 *
 * omega_j stacks (w_j, v_j); outputs are y_j = h(x_j, v_j).  States run
 * j = 0..horizon, noises and outputs j = 0..horizon (the inequality only
 * consumes them up to horizon - 1).
 */
struct TrajectoryPair {
    Variant variant = Variant::hypo;
    std::uint64_t seed = 0;
    std::vector<Vec> x, xt;
    std::vector<Vec> omega, omegat;
    std::vector<Eigen::Vector3d> y, yt;

    [[nodiscard]] long horizon() const { return static_cast<long>(x.size()) - 1; }
};

/**
 * @brief Draws one random trajectory pair over @p horizon_steps.
 *
 * Initial states ~ Uniform(X); per-step noises ~ Uniform(W x V); the shared
 * input is a daily dose ~ Uniform[0, 40] ug L-T4 (hypo) or Uniform[0, 35] mg
 * MMI (hyper).  Both trajectories advance through step_map with per-step
 * constant w.  Throws std::runtime_error naming the seed on integration
 * failure.
 */
[[nodiscard]] TrajectoryPair sample_pair(SplitMix64& rng, Variant variant,
                                         long horizon_steps, const ModelParameters& p,
                                         const IntegratorConfig& cfg);

/// @brief Left/right-hand side series of the dissipation inequality, k = 0..horizon.
struct IossSides {
    std::vector<double> lhs;
    std::vector<double> rhs;
};

/**
 * @brief Evaluates both sides via the one-step recursion
 *        rhs_{k+1} = eta rhs_k + |omega_k - omega~_k|^2_Q
 *                    + [k in K] |y_k - y~_k|^2_R.
 */
[[nodiscard]] IossSides iioss_sides(const TrajectoryPair& pair,
                                    const IossCertificate& cert,
                                    const SamplingSet& K);

/// @brief Evaluates rhs by direct summation (O(horizon^2)); test reference.
[[nodiscard]] IossSides iioss_sides_direct(const TrajectoryPair& pair,
                                           const IossCertificate& cert,
                                           const SamplingSet& K);

/// @brief Outcome of one empirical verification run.
struct VerifyReport {
    Scheme scheme = Scheme::a;
    int start_index = 1;
    int n_pairs = 0;
    long horizon = 0;
    long violations = 0;     ///< steps with lhs > rhs (1 + 1e-9)
    double max_ratio = 0.0;  ///< max over pairs/steps of lhs/rhs
    std::uint64_t base_seed = 0;
    std::uint64_t worst_pair_seed = 0;
    long worst_step = -1;

    [[nodiscard]] std::string to_json() const;
};

/**
 * @brief Samples @p n_pairs trajectory pairs and counts inequality violations.
 *
 * Pair p uses the deterministic child stream rng.split(p), so reports are
 * reproducible from base_seed alone and pairs are independent.
 */
[[nodiscard]] VerifyReport verify(int n_pairs, const IossCertificate& cert,
                                  Scheme scheme, int start_index, long horizon,
                                  std::uint64_t base_seed, Variant variant,
                                  const ModelParameters& p, const IntegratorConfig& cfg);

/// @brief Writes report.to_json() to @p path.
void write_verify_report(const std::string& path, const VerifyReport& report);

} // namespace ptloop
