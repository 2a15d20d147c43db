#pragma once

// Independent reference implementations used by unit and acceptance tests.
// They deliberately avoid the library's own helpers.

#include <cmath>
#include <cstddef>
#include <vector>

namespace habsk::oracle {

inline constexpr double kPi = 3.14159265358979323846;

/// Bearing the wind blows toward, clockwise from north, in [0, 360).
inline double toward_bearing(double u, double v) {
    double b = std::atan2(u, v) * 180.0 / kPi;
    while (b < 0.0) b += 360.0;
    while (b >= 360.0) b -= 360.0;
    return b;
}

/// 1-based bin found by scanning every bin interval
/// [(i-1)w - offset, i w - offset) shifted by whole turns.
inline int scan_bin(double bearing, int num_bins, double offset) {
    const double w = 360.0 / num_bins;
    for (int i = 1; i <= num_bins; ++i) {
        const double lo = (i - 1) * w - offset, hi = i * w - offset;
        for (int turn = -1; turn <= 1; ++turn) {
            const double x = bearing + 360.0 * turn;
            if (x >= lo && x < hi) return i;
        }
    }
    return -1;
}

inline bool opposite(int a, int b, int num_bins) {
    const int half = num_bins / 2;
    return a != b && (a - b == half || b - a == half);
}

/// Greedy pairing: repeatedly match any two unmatched levels in opposite
/// bins. Optimal here because compatibility only depends on the bin pair.
inline int greedy_pairs(const std::vector<int>& bins, int num_bins) {
    std::vector<bool> used(bins.size(), false);
    int pairs = 0;
    for (std::size_t i = 0; i < bins.size(); ++i) {
        if (used[i]) continue;
        for (std::size_t j = i + 1; j < bins.size(); ++j)
            if (!used[j] && opposite(bins[i], bins[j], num_bins)) {
                used[i] = used[j] = true;
                ++pairs;
                break;
            }
    }
    return pairs;
}

namespace detail {
inline int best_matching(const std::vector<int>& bins, std::vector<bool>& used, std::size_t from, int num_bins) {
    while (from < bins.size() && used[from]) ++from;
    if (from >= bins.size()) return 0;
    used[from] = true;
    int best = best_matching(bins, used, from + 1, num_bins);  // leave `from` unmatched
    for (std::size_t j = from + 1; j < bins.size(); ++j)
        if (!used[j] && opposite(bins[from], bins[j], num_bins)) {
            used[j] = true;
            const int m = 1 + best_matching(bins, used, from + 1, num_bins);
            used[j] = false;
            if (m > best) best = m;
        }
    used[from] = false;
    return best;
}
}  // namespace detail

/// Exhaustive maximum matching over all ways of pairing the levels.
/// Exponential; for short columns only.
inline int exhaustive_pairs(const std::vector<int>& bins, int num_bins) {
    std::vector<bool> used(bins.size(), false);
    return detail::best_matching(bins, used, 0, num_bins);
}

struct Column {
    std::vector<double> u, v;
};

/// T_norm computed from scratch: bin every non-calm level, count the
/// maximal number of disjoint opposing pairs, divide by floor(N/2).
inline double t_norm(const Column& c, int num_bins, double offset, double calm, bool exhaustive = false) {
    std::vector<int> bins;
    for (std::size_t i = 0; i < c.u.size(); ++i) {
        if (std::sqrt(c.u[i] * c.u[i] + c.v[i] * c.v[i]) < calm) continue;
        bins.push_back(scan_bin(toward_bearing(c.u[i], c.v[i]), num_bins, offset));
    }
    const int half = static_cast<int>(bins.size()) / 2;
    if (half == 0) return 0.0;
    const int p = exhaustive ? exhaustive_pairs(bins, num_bins) : greedy_pairs(bins, num_bins);
    return static_cast<double>(p) / half;
}

}  // namespace habsk::oracle
