#include "habsk/forecast_score.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "habsk/errors.hpp"
#include "habsk/parallel.hpp"
#include "habsk/rng.hpp"
#include "habsk/stats.hpp"

namespace habsk {

void ScoreConfig::validate() const {
    if (num_bins < 4 || num_bins % 2 != 0) throw ConfigError("score.num_bins must be even and >= 4");
    const double width = 360.0 / num_bins;
    if (!(center_offset_deg >= 0.0 && center_offset_deg < 2.0 * width))
        throw ConfigError(fmt::format("score.center_offset_deg must lie in [0, {})", 2.0 * width));
    if (!(altitude_min <= altitude_max)) throw ConfigError("score altitude window needs min <= max");
    if (timestamps < 1) throw ConfigError("score.timestamps must be >= 1");
    if (!(calm_threshold >= 0.0)) throw ConfigError("score.calm_threshold must be >= 0");
}

int bin_direction(double bearing_deg, const ScoreConfig& cfg) {
    const double width = 360.0 / cfg.num_bins;
    const double shifted = wrap_360(bearing_deg + cfg.center_offset_deg);
    int idx = static_cast<int>(std::floor(shifted / width));
    idx = std::clamp(idx, 0, cfg.num_bins - 1);
    return idx + 1;
}

OpposingScore opposing_score(std::span<const WindVector> column, const ScoreConfig& cfg) {
    if (column.empty()) throw EmptyInputError("opposing score needs at least one altitude level");
    OpposingScore out;
    out.histogram.counts.assign(static_cast<std::size_t>(cfg.num_bins), 0);
    for (const auto& w : column) {
        if (cfg.calm_policy == CalmPolicy::Exclude && w.magnitude() < cfg.calm_threshold) continue;
        ++out.histogram.counts[static_cast<std::size_t>(bin_direction(w.bearing(), cfg) - 1)];
        ++out.histogram.levels_counted;
    }
    const auto half = static_cast<std::size_t>(cfg.num_bins / 2);
    for (std::size_t i = 0; i < half; ++i)
        out.pair_count += std::min(out.histogram.counts[i], out.histogram.counts[i + half]);
    const int max_pairs = out.histogram.levels_counted / 2;
    out.t_norm = max_pairs > 0 ? static_cast<double>(out.pair_count) / max_pairs : 0.0;
    return out;
}

ForecastScore forecast_score(const WindGrid& grid, const GeoCoord& where, std::span<const UnixSeconds> times,
                             const ScoreConfig& cfg, SampleOptions opts) {
    cfg.validate();
    if (times.empty()) throw EmptyInputError("forecast score needs at least one timestamp");

    std::vector<std::size_t> levels;
    for (std::size_t k = 0; k < grid.levels().size(); ++k) {
        const double z = grid.levels()[k].altitude_m;
        if (z >= cfg.altitude_min && z <= cfg.altitude_max) levels.push_back(k);
    }
    if (levels.empty()) throw ConfigError("score altitude window selects no grid levels");

    ForecastScore fs;
    fs.coordinate = where;
    fs.source_kind = grid.kind();
    std::vector<ColumnSample> column;
    std::vector<WindVector> winds(levels.size());
    for (UnixSeconds t : times) {
        sample_column(grid, where.latitude, where.longitude, t, column, opts);
        for (std::size_t i = 0; i < levels.size(); ++i) winds[i] = column[levels[i]].wind;
        auto s = opposing_score(winds, cfg);
        fs.per_timestamp.push_back(s.t_norm);
        fs.histograms.push_back(std::move(s.histogram));
    }
    double sum = 0.0;
    for (double x : fs.per_timestamp) sum += x;
    fs.value = sum / static_cast<double>(fs.per_timestamp.size());
    return fs;
}

namespace {

ScoreDistribution summarize(const std::vector<double>& raw, bool filter_zero) {
    ScoreDistribution d;
    const auto zeros = std::count(raw.begin(), raw.end(), 0.0);
    d.zero_fraction = raw.empty() ? 0.0 : static_cast<double>(zeros) / static_cast<double>(raw.size());
    for (double s : raw)
        if (!filter_zero || s != 0.0) d.scores.push_back(s);
    const auto ms = mean_std(d.scores);
    d.mean = ms.mean;
    d.stddev = ms.stddev;
    return d;
}

}  // namespace

DistributionResult score_distribution(const WindGrid& grid, std::size_t samples, std::uint64_t seed,
                                      const ScoreConfig& cfg, bool filter_zero, const WindGrid* paired,
                                      unsigned workers) {
    cfg.validate();
    if (samples < 1) throw ConfigError("score distribution needs samples >= 1");

    BoundingBox box = grid.bounds();
    if (paired) {
        const BoundingBox pb = paired->bounds();
        box = {std::max(box.lat_min, pb.lat_min), std::min(box.lat_max, pb.lat_max),
               std::max(box.lon_min, pb.lon_min), std::min(box.lon_max, pb.lon_max)};
        if (box.lat_min > box.lat_max) throw CoverageError("latitude", "paired grids do not overlap in latitude");
        if (box.lon_min > box.lon_max) throw CoverageError("longitude", "paired grids do not overlap in longitude");
        if (paired->time_end() < grid.time_begin() || paired->time_begin() > grid.time_end())
            throw CoverageError("time", "paired grids do not overlap in time");
    }

    const auto& frames = grid.times();
    const std::size_t n_t = std::min(cfg.timestamps, frames.size());
    const auto last_start = static_cast<std::int64_t>(frames.size() - n_t);

    DistributionResult out;
    out.samples.resize(samples);
    parallel_for(samples, workers, [&](std::size_t i) {
        Rng rng(substream_seed(seed, i));
        ScoreSample s;
        s.coordinate.latitude = rng.uniform(box.lat_min, box.lat_max);
        s.coordinate.longitude = rng.uniform(box.lon_min, box.lon_max);
        const auto start = static_cast<std::size_t>(rng.integer(0, last_start));
        s.times.assign(frames.begin() + static_cast<std::ptrdiff_t>(start),
                       frames.begin() + static_cast<std::ptrdiff_t>(start + n_t));
        s.primary = forecast_score(grid, s.coordinate, s.times, cfg).value;
        if (paired) s.paired = forecast_score(*paired, s.coordinate, s.times, cfg).value;
        out.samples[i] = std::move(s);
    });

    std::vector<double> raw;
    raw.reserve(samples);
    for (const auto& s : out.samples) raw.push_back(s.primary);
    out.primary = summarize(raw, filter_zero);
    if (paired) {
        raw.clear();
        for (const auto& s : out.samples) raw.push_back(*s.paired);
        out.paired = summarize(raw, filter_zero);
    }
    return out;
}

std::vector<UnixSeconds> frames_in_window(const WindGrid& grid, UnixSeconds begin, UnixSeconds end) {
    std::vector<UnixSeconds> out;
    for (UnixSeconds t : grid.times())
        if (t >= begin && t <= end) out.push_back(t);
    if (out.empty()) out.push_back(std::clamp(begin, grid.time_begin(), grid.time_end()));
    return out;
}

}  // namespace habsk
