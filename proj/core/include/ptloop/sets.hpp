#pragma once

#include "ptloop/rng.hpp"
#include "ptloop/state.hpp"

#include <Eigen/Core>

#include <vector>

namespace ptloop {

/**
 * @brief Axis-aligned box with optional +infinity upper bounds.
 *
 * Used for the state set X, the process-noise set W, the measurement-noise
 * set V and the output set Y.  Membership, projection and uniform sampling
 * are all componentwise.
 */
class BoxSet {
public:
    BoxSet() = default;
    /// @brief Throws std::invalid_argument unless lower <= upper componentwise.
    BoxSet(Eigen::VectorXd lower, Eigen::VectorXd upper);

    [[nodiscard]] int dim() const { return static_cast<int>(lower_.size()); }
    [[nodiscard]] const Eigen::VectorXd& lower() const { return lower_; }
    [[nodiscard]] const Eigen::VectorXd& upper() const { return upper_; }

    /// @brief Componentwise membership with optional tolerance.
    [[nodiscard]] bool contains(const Eigen::Ref<const Eigen::VectorXd>& p,
                                double tol = 0.0) const;

    /// @brief Euclidean projection onto the box.
    [[nodiscard]] Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& p) const;

    /// @brief Uniform sample; throws std::domain_error if any bound is infinite.
    [[nodiscard]] Eigen::VectorXd sample(SplitMix64& rng) const;

    /// @brief Minkowski sum with another box of the same dimension.
    [[nodiscard]] BoxSet minkowski_sum(const BoxSet& other) const;

    /// @brief Sub-box of the listed coordinates, in the given order.
    [[nodiscard]] BoxSet select(const std::vector<int>& indices) const;

private:
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
};

/// @brief The constraint sets of one model variant.
struct ConstraintSets {
    BoxSet X; ///< state set (dim 6 or 7)
    BoxSet W; ///< process-noise set (dim 5 or 4); the w_LT3 interval is {0}
    BoxSet V; ///< measurement-noise set, +-10% of the healthy outputs (dim 3)
    BoxSet Y; ///< output set: projection of X onto (T4, T3p, TSH) + V (dim 3)
};

/**
 * @brief Constraint sets for @p variant.
 *
 * X_hypo = [0.2,0.6]x[0.1,1.4]x[0.8,3.1]x[0.1,1.3]x[1.4,6]x[1.5,6.3],
 * X_hyper = [0.2,17]x[0.4,5]x[1.2,11]x[0.4,4.5]x[0.6,3.5]x[0.7,3.5]x[0,5],
 * W as in ProcessNoise docs, V = +-(0.117, 0.271, 0.187).
 */
[[nodiscard]] ConstraintSets constraint_sets(Variant variant);

/// @brief The three measured coordinates within the state vector.
inline const std::vector<int>& measured_indices() {
    static const std::vector<int> idx = {1, 2, 4};
    return idx;
}

} // namespace ptloop
