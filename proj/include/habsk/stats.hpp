#pragma once

#include <cmath>
#include <span>

namespace habsk {

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;  // population
};

inline MeanStd mean_std(std::span<const double> xs) {
    if (xs.empty()) return {};
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<double>(xs.size()))};
}

}  // namespace habsk
