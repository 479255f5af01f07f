#include "ptloop/sampling.hpp"

#include "ptloop/csv.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

namespace ptloop {

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::a: return "a";
        case Scheme::b: return "b";
        case Scheme::c: return "c";
        case Scheme::d: return "d";
    }
    throw std::logic_error("to_string: invalid Scheme");
}

Scheme scheme_from_string(const std::string& name) {
    if (name == "a") return Scheme::a;
    if (name == "b") return Scheme::b;
    if (name == "c") return Scheme::c;
    if (name == "d") return Scheme::d;
    throw std::invalid_argument("unknown sampling scheme '" + name + "' (expected a, b, c or d)");
}

long scheme_interval_bound(Scheme s) {
    switch (s) {
        case Scheme::a: return 1;
        case Scheme::b: return 30;
        case Scheme::c: return 57;
        case Scheme::d: return 114;
    }
    throw std::logic_error("scheme_interval_bound: invalid Scheme");
}

long delta0(long j) {
    if (j < 1) {
        throw std::invalid_argument("delta0: index must be >= 1, got " + std::to_string(j));
    }
    // Nonnegative modulus: in C++, (j - 2) % 6 is negative for j = 1.
    const long m = ((j - 2) % 6 + 6) % 6;
    return 10 - std::labs(m - 3);
}

long delta(Scheme scheme, long i) {
    if (i < 1) {
        throw std::invalid_argument("delta: index must be >= 1, got " + std::to_string(i));
    }
    if (i == 1) return 0; // every sequence gates its first interval to zero
    switch (scheme) {
        case Scheme::a: return 1;
        case Scheme::b: return 3 * delta0(i);
        case Scheme::c: return delta(Scheme::b, 2 * (i - 1)) + delta(Scheme::b, 2 * (i - 1) + 1);
        case Scheme::d: return delta(Scheme::c, 2 * (i - 1)) + delta(Scheme::c, 2 * (i - 1) + 1);
    }
    throw std::logic_error("delta: invalid Scheme");
}

bool SamplingSet::contains(long step) const {
    return std::binary_search(instants.begin(), instants.end(), step);
}

SamplingSet realize(Scheme scheme, int i, long horizon_steps) {
    if (i < 1) {
        throw std::invalid_argument("realize: start index must be >= 1");
    }
    if (horizon_steps < 0) {
        throw std::invalid_argument("realize: negative horizon");
    }
    SamplingSet set;
    set.scheme = scheme;
    set.start_index = i;
    set.horizon = horizon_steps;
    long sum = 0;
    for (long k = i;; ++k) {
        sum += delta(scheme, k);
        if (sum > horizon_steps) break;
        if (set.instants.empty() || set.instants.back() != sum) {
            set.instants.push_back(sum);
        }
    }
    return set;
}

void write_sampling_csv(const std::string& path, const SamplingSet& set) {
    csv::Table table;
    table.header = {"step"};
    for (long step : set.instants) {
        table.rows.push_back({static_cast<double>(step)});
    }
    csv::write_table(path, table);
}

} // namespace ptloop
