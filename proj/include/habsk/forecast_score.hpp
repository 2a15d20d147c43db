#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "habsk/wind_grid.hpp"

namespace habsk {

enum class CalmPolicy { Exclude, Include };

struct ScoreConfig {
    int num_bins = 8;                 // N_b, even and >= 4
    double center_offset_deg = 22.5;  // θ_C; 22.5 centres north in bin 1
    double altitude_min = 0.0;        // levels whose nominal altitude falls in
    double altitude_max = 100000.0;   // [altitude_min, altitude_max] are scored
    std::size_t timestamps = 7;       // n_t, frames per sampled forecast subset
    double calm_threshold = 2.0;      // m/s
    CalmPolicy calm_policy = CalmPolicy::Exclude;

    void validate() const;
};

/// Per-bin level counts. counts[0] is bin 1.
struct BinHistogram {
    std::vector<int> counts;
    int levels_counted = 0;  // N_a
};

struct OpposingScore {
    double t_norm = 0.0;  // [0, 1]
    int pair_count = 0;   // Σ min(C_i, C_{i + N_b/2})
    BinHistogram histogram;
};

/// 1-based bin index for a wind bearing. Bin i covers
/// [(i-1)·360/N_b - θ_C, i·360/N_b - θ_C) modulo 360.
int bin_direction(double bearing_deg, const ScoreConfig& cfg);

/// Opposing-pair score for one altitude column at one timestamp. Calm levels
/// are dropped from both the histogram and N_a under CalmPolicy::Exclude.
/// T_norm = pair_count / floor(N_a / 2), or 0 when N_a < 2.
OpposingScore opposing_score(std::span<const WindVector> column, const ScoreConfig& cfg);

struct ForecastScore {
    double value = 0.0;                 // mean of per_timestamp, [0, 1]
    std::vector<double> per_timestamp;  // T_norm per evaluated frame
    std::vector<BinHistogram> histograms;
    GeoCoord coordinate;
    GridKind source_kind = GridKind::ForecastLike;
};

/// Scores the vertical column at `where` for each of `times` and averages.
ForecastScore forecast_score(const WindGrid& grid, const GeoCoord& where, std::span<const UnixSeconds> times,
                             const ScoreConfig& cfg, SampleOptions opts = {});

struct ScoreSample {
    GeoCoord coordinate;
    std::vector<UnixSeconds> times;
    double primary = 0.0;
    std::optional<double> paired;
};

struct ScoreDistribution {
    std::vector<double> scores;  // zeros removed when filtered
    double zero_fraction = 0.0;  // computed before filtering
    double mean = 0.0;
    double stddev = 0.0;
};

struct DistributionResult {
    std::vector<ScoreSample> samples;
    ScoreDistribution primary;
    std::optional<ScoreDistribution> paired;
};

/// Draws `samples` random forecast subsets (uniform coordinate inside the
/// grid, or inside both grids when `paired` is given, plus a random run of
/// cfg.timestamps consecutive frames of `grid`) and scores each one. Paired
/// grids are scored at the identical (lat, lon, times) tuple. Sample i uses
/// RNG substream i of `seed`, so results do not depend on `workers`.
DistributionResult score_distribution(const WindGrid& grid, std::size_t samples, std::uint64_t seed,
                                      const ScoreConfig& cfg, bool filter_zero, const WindGrid* paired = nullptr,
                                      unsigned workers = 1);

/// Frames of `grid` inside [begin, end], or the nearest frame to `begin`
/// when none fall inside.
std::vector<UnixSeconds> frames_in_window(const WindGrid& grid, UnixSeconds begin, UnixSeconds end);

}  // namespace habsk
