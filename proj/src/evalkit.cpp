#include "habsk/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include <fmt/format.h>

#include "habsk/errors.hpp"
#include "habsk/parallel.hpp"

namespace habsk {

PolicyFactory greedy_policy_factory(std::shared_ptr<const PolicyBundle> bundle) {
    return [bundle = std::move(bundle)](std::uint64_t) { return greedy_policy(bundle); };
}

PolicyFactory random_policy_factory() {
    return [](std::uint64_t seed) -> Policy {
        return [rng = Rng(seed)](const Observation&) mutable {
            return action_from_index(static_cast<int>(rng.integer(0, kNumActions - 1)));
        };
    };
}

namespace {

EpisodeRecord run_campaign_episode(const EvalCampaign& c, const MonthLibrary& month, std::size_t m, std::size_t i,
                                   const PolicyFactory& policies) {
    Rng rng(substream_seed(substream_seed(c.seed, m), i));
    const EpisodeSpec spec = draw_episode(month.pairs, c.sim, c.randomize_arena, rng);
    const GridPair& pair = month.pairs[spec.pair];
    const Policy policy = policies(rng.next_u64());
    EpisodeResult res = run_episode(policy, *pair.truth, *pair.forecast, spec.sim, c.reward, spec.seed);

    EpisodeRecord r;
    r.month = month.month;
    r.index = i;
    r.grid = pair.name;
    r.start_time = spec.sim.start_time.value_or(pair.truth->time_begin());
    r.report = res.report;
    r.report.month = month.month;
    const auto frames = frames_in_window(*pair.forecast, r.start_time, r.start_time + spec.sim.episode_seconds());
    r.report.forecast_score = forecast_score(*pair.forecast, spec.sim.arena.center, frames, c.score).value;
    r.total_reward = res.total_reward;
    if (c.keep_trajectories) r.trajectory = std::move(res.trajectory);
    return r;
}

}  // namespace

CampaignResult run_campaign(const EvalCampaign& c, const PolicyFactory& policies,
                            const std::function<void(const EpisodeRecord&)>& on_record) {
    if (c.months.empty()) throw ConfigError("evaluation campaign needs at least one month");
    if (c.episodes_per_month < 1) throw ConfigError("evaluation campaign needs episodes_per_month >= 1");
    if (!policies) throw ConfigError("evaluation campaign needs a policy");
    c.sim.validate();
    c.reward.validate();
    c.score.validate();

    CampaignResult out;
    for (std::size_t m = 0; m < c.months.size(); ++m) {
        const MonthLibrary& month = c.months[m];
        if (month.pairs.empty()) throw ConfigError("month '" + month.month + "' has no forecast pairs");
        std::vector<std::optional<EpisodeRecord>> slots(c.episodes_per_month);
        std::exception_ptr failure;
        try {
            parallel_for(c.episodes_per_month, c.workers,
                         [&](std::size_t i) { slots[i] = run_campaign_episode(c, month, m, i, policies); });
        } catch (...) {
            failure = std::current_exception();
        }
        for (auto& s : slots) {
            if (!s) {
                if (failure) break;
                continue;
            }
            if (on_record) on_record(*s);
            out.records.push_back(std::move(*s));
        }
        if (failure) std::rethrow_exception(failure);

        std::vector<double> twr, fs;
        for (auto it = out.records.end() - static_cast<std::ptrdiff_t>(c.episodes_per_month); it != out.records.end();
             ++it) {
            twr.push_back(it->report.twr50);
            fs.push_back(*it->report.forecast_score);
        }
        out.months.push_back({month.month, c.episodes_per_month, mean_std(twr), mean_std(fs)});
    }
    return out;
}

void write_campaign_summary_csv(std::ostream& os, const std::vector<MonthSummary>& months) {
    os << "month,episodes,twr50_mean,twr50_sd,fs_mean,fs_sd\n";
    for (const auto& m : months)
        os << fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", m.month, m.episodes, m.twr50.mean, m.twr50.stddev,
                          m.forecast_score.mean, m.forecast_score.stddev);
}

void write_campaign_records_csv(std::ostream& os, const std::vector<EpisodeRecord>& records) {
    os << "month,episode,grid,start_utc,latitude,longitude,twr25,twr50,twr75,forecast_score,total_reward\n";
    for (const auto& r : records)
        os << fmt::format("{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", r.month, r.index, r.grid,
                          format_utc(r.start_time), r.report.coordinate.latitude, r.report.coordinate.longitude,
                          r.report.twr25, r.report.twr50, r.report.twr75, r.report.forecast_score.value_or(0.0),
                          r.total_reward);
}

HistogramSpec HistogramSpec::uniform(double width) {
    if (!(width > 0.0 && width <= 1.0)) throw ConfigError("histogram bin width must lie in (0, 1]");
    HistogramSpec s;
    const auto n = static_cast<int>(std::llround(1.0 / width));
    if (std::abs(n * width - 1.0) > 1e-9) throw ConfigError("histogram bin width must divide 1");
    for (int i = 0; i <= n; ++i) s.fs_edges.push_back(static_cast<double>(i) / n);
    s.twr_edges = s.fs_edges;
    return s;
}

void HistogramSpec::validate() const {
    for (const auto* e : {&fs_edges, &twr_edges}) {
        if (e->size() < 2) throw ConfigError("histogram edges need at least two values");
        for (std::size_t i = 1; i < e->size(); ++i)
            if (!((*e)[i] > (*e)[i - 1])) throw ConfigError("histogram edges must be strictly increasing");
        for (double x : *e)
            if (!std::isfinite(x)) throw ConfigError("histogram edges must be finite");
    }
    if (min_count < 0) throw ConfigError("histogram min_count must be >= 0");
    if (!std::isfinite(zero_threshold)) throw ConfigError("histogram zero threshold must be finite");
}

namespace {

/// Bin index for x, with the last bin closed on the right; -1 when outside.
int locate(const std::vector<double>& edges, double x) {
    if (x < edges.front() || x > edges.back() || std::isnan(x)) return -1;
    const auto it = std::upper_bound(edges.begin(), edges.end(), x);
    const auto i = static_cast<int>(it - edges.begin()) - 1;
    return std::min(i, static_cast<int>(edges.size()) - 2);
}

}  // namespace

JointHistogram joint_histogram(std::span<const ScoredOutcome> outcomes, const HistogramSpec& spec) {
    spec.validate();
    if (outcomes.empty()) throw EmptyInputError("joint histogram needs at least one record");
    JointHistogram h;
    h.fs_edges = spec.fs_edges;
    h.twr_edges = spec.twr_edges;
    h.counts.assign(h.twr_bins(), std::vector<int>(h.fs_bins(), 0));
    h.filtered = h.counts;
    h.fs_excluded.assign(h.fs_bins(), false);
    if (spec.zero_filter)
        for (std::size_t f = 0; f < h.fs_bins(); ++f) h.fs_excluded[f] = h.fs_edges[f + 1] <= spec.zero_threshold;

    for (const auto& o : outcomes) {
        const int f = locate(h.fs_edges, o.forecast_score);
        const int t = locate(h.twr_edges, o.twr50);
        if (f < 0 || t < 0)
            throw DataError(fmt::format("record (FS {}, TWR50 {}) lies outside the histogram edges", o.forecast_score,
                                        o.twr50));
        ++h.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(f)];
        ++h.total;
        if (!(spec.zero_filter && o.forecast_score < spec.zero_threshold))
            ++h.filtered[static_cast<std::size_t>(t)][static_cast<std::size_t>(f)];
    }
    for (auto& row : h.filtered)
        for (int& c : row)
            if (c < spec.min_count) c = 0;
    return h;
}

JointHistogram joint_histogram(const std::vector<EpisodeRecord>& records, const HistogramSpec& spec) {
    std::vector<ScoredOutcome> xs;
    xs.reserve(records.size());
    for (const auto& r : records) xs.push_back({r.report.forecast_score.value_or(0.0), r.report.twr50});
    return joint_histogram(xs, spec);
}

void write_histogram_csv(std::ostream& os, const JointHistogram& h, bool filtered) {
    os << "twr50_bin";
    for (std::size_t f = 0; f < h.fs_bins(); ++f)
        os << fmt::format(",fs_{:.2f}_{:.2f}{}", h.fs_edges[f], h.fs_edges[f + 1],
                          filtered && h.fs_excluded[f] ? "_excluded" : "");
    os << '\n';
    const auto& m = filtered ? h.filtered : h.counts;
    for (std::size_t t = h.twr_bins(); t-- > 0;) {
        os << fmt::format("{:.2f}_{:.2f}", h.twr_edges[t], h.twr_edges[t + 1]);
        for (std::size_t f = 0; f < h.fs_bins(); ++f) {
            os << ',';
            if (!filtered || m[t][f] > 0) os << m[t][f];
        }
        os << '\n';
    }
}

std::vector<double> mean_level_altitudes(const WindGrid& grid) {
    const auto& ax = grid.axes();
    std::vector<double> out(ax.levels.size(), 0.0);
    if (!grid.has_cell_altitude()) {
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = ax.levels[k].altitude_m;
        return out;
    }
    const std::size_t per_level = ax.latitudes.size() * ax.longitudes.size();
    for (std::size_t t = 0; t < ax.times.size(); ++t)
        for (std::size_t k = 0; k < out.size(); ++k)
            for (std::size_t i = 0; i < ax.latitudes.size(); ++i)
                for (std::size_t j = 0; j < ax.longitudes.size(); ++j) out[k] += grid.altitude_at(t, k, i, j);
    for (double& x : out) x /= static_cast<double>(per_level * ax.times.size());
    return out;
}

ModelDiffReport compare_models(const WindGrid& a, const WindGrid& b, const CompareSpec& spec, std::string label) {
    if (spec.samples < 1) throw ConfigError("model comparison needs samples >= 1");
    const BoundingBox ba = a.bounds(), bb = b.bounds();
    const BoundingBox box{std::max(ba.lat_min, bb.lat_min), std::min(ba.lat_max, bb.lat_max),
                          std::max(ba.lon_min, bb.lon_min), std::min(ba.lon_max, bb.lon_max)};
    if (box.lat_min > box.lat_max) throw CoverageError("latitude", "compared grids do not overlap in latitude");
    if (box.lon_min > box.lon_max) throw CoverageError("longitude", "compared grids do not overlap in longitude");
    std::vector<UnixSeconds> frames;
    for (UnixSeconds t : a.times())
        if (t >= b.time_begin() && t <= b.time_end()) frames.push_back(t);
    if (frames.empty()) throw CoverageError("time", "compared grids share no frames in time");

    const auto alt_a = mean_level_altitudes(a);
    const auto alt_b = mean_level_altitudes(b);
    ModelDiffReport rep;
    rep.label = std::move(label);
    rep.samples = spec.samples;
    std::vector<std::size_t> match(alt_a.size());
    for (std::size_t k = 0; k < alt_a.size(); ++k) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < alt_b.size(); ++j)
            if (std::abs(alt_b[j] - alt_a[k]) < std::abs(alt_b[best] - alt_a[k])) best = j;
        match[k] = best;
        LevelDiff d;
        d.level = k;
        d.altitude_m = alt_a[k];
        d.pressure_hpa = a.levels()[k].pressure_hpa;
        d.matched_level = best;
        d.matched_altitude_m = alt_b[best];
        rep.levels.push_back(d);
    }

    // Per-sample, per-level differences; NaN marks a skipped angle.
    const std::size_t nl = alt_a.size();
    std::vector<double> angles(spec.samples * nl), mags(spec.samples * nl);
    parallel_for(spec.samples, spec.workers, [&](std::size_t s) {
        Rng rng(substream_seed(spec.seed, s));
        const double lat = box.lat_min == box.lat_max ? box.lat_min : rng.uniform(box.lat_min, box.lat_max);
        const double lon = box.lon_min == box.lon_max ? box.lon_min : rng.uniform(box.lon_min, box.lon_max);
        const UnixSeconds t = frames[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(frames.size()) - 1))];
        const auto ca = sample_column(a, lat, lon, t);
        const auto cb = sample_column(b, lat, lon, t);
        for (std::size_t k = 0; k < nl; ++k) {
            const WindVector& wa = ca[k].wind;
            const WindVector& wb = cb[match[k]].wind;
            const double ma = wa.magnitude(), mb = wb.magnitude();
            mags[s * nl + k] = std::abs(mb - ma);
            angles[s * nl + k] = (ma < spec.angle_min_speed || mb < spec.angle_min_speed)
                                     ? std::numeric_limits<double>::quiet_NaN()
                                     : fold_angle(wa.bearing(), wb.bearing());
        }
    });

    std::vector<double> all_angles, all_mags, la, lm;
    for (std::size_t k = 0; k < nl; ++k) {
        la.clear();
        lm.clear();
        for (std::size_t s = 0; s < spec.samples; ++s) {
            const double ang = angles[s * nl + k];
            if (!std::isnan(ang)) la.push_back(ang);
            lm.push_back(mags[s * nl + k]);
        }
        rep.levels[k].angle_samples = la.size();
        rep.levels[k].angle = mean_std(la);
        rep.levels[k].magnitude = mean_std(lm);
        all_angles.insert(all_angles.end(), la.begin(), la.end());
        all_mags.insert(all_mags.end(), lm.begin(), lm.end());
    }
    rep.angle = mean_std(all_angles);
    rep.magnitude = mean_std(all_mags);
    return rep;
}

void write_model_diff_csv(std::ostream& os, const std::vector<ModelDiffReport>& reports) {
    os << "label,level,pressure_hpa,altitude_m,matched_altitude_m,angle_samples,angle_mean_deg,angle_sd_deg,"
          "magnitude_mean_ms,magnitude_sd_ms\n";
    for (const auto& r : reports) {
        for (const auto& d : r.levels)
            os << fmt::format("{},{},{},{:.1f},{:.1f},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", r.label, d.level,
                              d.pressure_hpa ? fmt::format("{:g}", *d.pressure_hpa) : std::string(), d.altitude_m,
                              d.matched_altitude_m, d.angle_samples, d.angle.mean, d.angle.stddev, d.magnitude.mean,
                              d.magnitude.stddev);
        os << fmt::format("{},all,,,,,{:.6f},{:.6f},{:.6f},{:.6f}\n", r.label, r.angle.mean, r.angle.stddev,
                          r.magnitude.mean, r.magnitude.stddev);
    }
}

std::vector<ZeroScoreRow> zero_score_table(const std::vector<MonthGridPair>& months, std::size_t samples,
                                           std::uint64_t seed, const ScoreConfig& cfg, unsigned workers) {
    if (samples < 1) throw ConfigError("zero-score table needs samples >= 1");
    std::vector<ZeroScoreRow> rows;
    for (std::size_t m = 0; m < months.size(); ++m) {
        const auto& mp = months[m];
        if (!mp.forecast || !mp.synthetic) throw ConfigError("month '" + mp.month + "' is missing a grid");
        const auto d =
            score_distribution(*mp.forecast, samples, substream_seed(seed, m), cfg, true, mp.synthetic.get(), workers);
        ZeroScoreRow r;
        r.month = mp.month;
        r.samples = samples;
        r.forecast_zero_fraction = d.primary.zero_fraction;
        r.synthetic_zero_fraction = d.paired->zero_fraction;
        r.forecast_filtered = {d.primary.mean, d.primary.stddev};
        r.synthetic_filtered = {d.paired->mean, d.paired->stddev};
        std::vector<double> fa, sa;
        for (const auto& s : d.samples) {
            fa.push_back(s.primary);
            sa.push_back(*s.paired);
        }
        r.forecast_all = mean_std(fa);
        r.synthetic_all = mean_std(sa);
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_zero_score_csv(std::ostream& os, const std::vector<ZeroScoreRow>& rows) {
    os << "month,samples,forecast_zero_pct,synthetic_zero_pct,forecast_mean_nonzero,forecast_sd_nonzero,"
          "synthetic_mean_nonzero,synthetic_sd_nonzero\n";
    for (const auto& r : rows)
        os << fmt::format("{},{},{:.2f},{:.2f},{:.6f},{:.6f},{:.6f},{:.6f}\n", r.month, r.samples,
                          100.0 * r.forecast_zero_fraction, 100.0 * r.synthetic_zero_fraction,
                          r.forecast_filtered.mean, r.forecast_filtered.stddev, r.synthetic_filtered.mean,
                          r.synthetic_filtered.stddev);
}

}  // namespace habsk
