#include "ptloop/sets.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ptloop {

namespace {

Eigen::VectorXd to_vector(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double value : values) v[i++] = value;
    return v;
}

} // namespace

BoxSet::BoxSet(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size()) {
        throw std::invalid_argument("BoxSet: bound dimensions differ");
    }
    for (Eigen::Index i = 0; i < lower_.size(); ++i) {
        if (!(lower_[i] <= upper_[i])) {
            throw std::invalid_argument("BoxSet: lower > upper in dimension " +
                                        std::to_string(i));
        }
    }
}

bool BoxSet::contains(const Eigen::Ref<const Eigen::VectorXd>& p, double tol) const {
    if (p.size() != dim()) {
        throw std::invalid_argument("BoxSet::contains: dimension mismatch");
    }
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p[i] < lower_[i] - tol || p[i] > upper_[i] + tol) return false;
    }
    return true;
}

Eigen::VectorXd BoxSet::project(const Eigen::Ref<const Eigen::VectorXd>& p) const {
    if (p.size() != dim()) {
        throw std::invalid_argument("BoxSet::project: dimension mismatch");
    }
    return p.cwiseMax(lower_).cwiseMin(upper_);
}

Eigen::VectorXd BoxSet::sample(SplitMix64& rng) const {
    Eigen::VectorXd out(dim());
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i])) {
            throw std::domain_error("BoxSet::sample: infinite bound in dimension " +
                                    std::to_string(i));
        }
        out[i] = rng.uniform(lower_[i], upper_[i]);
    }
    return out;
}

BoxSet BoxSet::minkowski_sum(const BoxSet& other) const {
    if (other.dim() != dim()) {
        throw std::invalid_argument("BoxSet::minkowski_sum: dimension mismatch");
    }
    return {lower_ + other.lower_, upper_ + other.upper_};
}

BoxSet BoxSet::select(const std::vector<int>& indices) const {
    Eigen::VectorXd lo(static_cast<Eigen::Index>(indices.size()));
    Eigen::VectorXd up(static_cast<Eigen::Index>(indices.size()));
    Eigen::Index out = 0;
    for (int i : indices) {
        if (i < 0 || i >= dim()) {
            throw std::invalid_argument("BoxSet::select: index " + std::to_string(i) +
                                        " out of range");
        }
        lo[out] = lower_[i];
        up[out] = upper_[i];
        ++out;
    }
    return {lo, up};
}

ConstraintSets constraint_sets(Variant variant) {
    ConstraintSets sets;
    // Measurement noise: +-10% of the healthy outputs (1.17, 2.71, 1.87).
    const Eigen::VectorXd v_mag = to_vector({0.117, 0.271, 0.187});
    sets.V = BoxSet(-v_mag, v_mag);
    if (variant == Variant::hypo) {
        sets.X = BoxSet(to_vector({0.2, 0.1, 0.8, 0.1, 1.4, 1.5}),
                        to_vector({0.6, 1.4, 3.1, 1.3, 6.0, 6.3}));
        sets.W = BoxSet(to_vector({-0.1, -0.1, -0.3, 0.0, 0.0}),
                        to_vector({0.1, 0.1, 0.3, 0.0, 1.0}));
    } else {
        sets.X = BoxSet(to_vector({0.2, 0.4, 1.2, 0.4, 0.6, 0.7, 0.0}),
                        to_vector({17.0, 5.0, 11.0, 4.5, 3.5, 3.5, 5.0}));
        sets.W = BoxSet(to_vector({-0.1, -0.1, -0.3, 0.0}),
                        to_vector({0.1, 0.1, 0.3, 1.0}));
    }
    sets.Y = sets.X.select(measured_indices()).minkowski_sum(sets.V);
    return sets;
}

} // namespace ptloop
