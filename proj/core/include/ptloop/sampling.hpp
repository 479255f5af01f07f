#pragma once

#include <string>
#include <vector>

namespace ptloop {

/// @brief The four measurement-interval schemes (every 8 h / ~1 week / ~2 weeks / ~4-6 weeks).
enum class Scheme { a, b, c, d };

[[nodiscard]] std::string to_string(Scheme s);
[[nodiscard]] Scheme scheme_from_string(const std::string& name);

/// @brief Largest interval (in steps) the scheme can produce: 1, 30, 57, 114.
[[nodiscard]] long scheme_interval_bound(Scheme s);

/**
 * @brief Base periodic interval sequence delta0_j = 10 - |(j-2) mod 6 - 3|
 *        (nonnegative modulus), i.e. 8, 7, 8, 9, 10, 9, 8, 7, 8, ... steps.
 *
 * Throws std::invalid_argument for j < 1.
 */
[[nodiscard]] long delta0(long j);

/**
 * @brief Interval sequence of @p scheme at index i >= 1, in T_d steps.
 *
 * All four sequences gate the first interval to zero (indicator of i >= 2):
 *   a: 1;  b: 3 delta0_i;  c: delta_b(2(i-1)) + delta_b(2(i-1)+1);
 *   d: delta_c(2(i-1)) + delta_c(2(i-1)+1).
 *
 * Scheme a samples at every step (the 8 h interval); throws
 * std::invalid_argument for i < 1.
 */
[[nodiscard]] long delta(Scheme scheme, long i);

/**
 * @brief Sampling set K_i realized up to a horizon: the partial sums
 *        sum_{k=i}^{j+i-1} delta_k for j = 1, 2, ... that are <= horizon.
 */
struct SamplingSet {
    Scheme scheme = Scheme::a;
    int start_index = 1;
    long horizon = 0;
    std::vector<long> instants; ///< sorted, duplicate-free step indices

    /// @brief Membership test (binary search).
    [[nodiscard]] bool contains(long step) const;
};

/// @brief Realizes K_i of @p scheme up to @p horizon_steps (inclusive).
[[nodiscard]] SamplingSet realize(Scheme scheme, int i, long horizon_steps);

/// @brief Writes the instants as a one-column CSV (header "step").
void write_sampling_csv(const std::string& path, const SamplingSet& set);

} // namespace ptloop
