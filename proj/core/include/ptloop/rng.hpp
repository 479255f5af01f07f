#pragma once

#include <cstdint>

namespace ptloop {

/**
 * @brief Deterministic 64-bit generator (SplitMix64) with stream splitting.
 *
 * Every random draw in the toolkit flows through this generator so that a run
 * is fully reproducible from a single 64-bit seed.  Streams for independent
 * work items (trajectory pairs, noise channels, ...) are derived with split(),
 * which hashes (seed, index) and therefore does not depend on draw order.
 *
 * Uniform doubles are produced from the top 53 bits, giving bit-identical
 * sequences on every platform with IEEE-754 doubles.
 */
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    /// @brief Next raw 64-bit value.
    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// @brief Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// @brief Uniform double in [lo, hi].
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    /**
     * @brief Deterministic child stream for work item @p index.
     *
     * The child seed mixes the parent seed and the index through one SplitMix64
     * round each, so adjacent indices yield statistically independent streams.
     */
    [[nodiscard]] SplitMix64 split(std::uint64_t index) const {
        SplitMix64 mixer(state_ ^ (0xA3EC647659359ACDULL * (index + 1)));
        std::uint64_t child = mixer.next_u64();
        mixer.next_u64();
        return SplitMix64(child);
    }

    /// @brief Current internal state (used for reporting seeds in run logs).
    [[nodiscard]] std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

} // namespace ptloop
