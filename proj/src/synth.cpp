#include "habsk/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "habsk/errors.hpp"

namespace habsk {

void SynthesisConfig::validate() const {
    if (!(bin_height > 0.0)) throw ConfigError("synthesis.bin_height must be > 0");
    if (!(altitude_floor < altitude_ceiling)) throw ConfigError("synthesis altitude window needs floor < ceiling");
    const double n = (altitude_ceiling - altitude_floor) / bin_height;
    if (std::abs(n - std::round(n)) > 1e-9)
        throw ConfigError(fmt::format("synthesis altitude window ({} m) is not a multiple of bin_height ({} m)",
                                      altitude_ceiling - altitude_floor, bin_height));
    if (!(grid_resolution > 0.0)) throw ConfigError("synthesis.grid_resolution must be > 0");
    if (!(smoothing_sigma >= 0.0)) throw ConfigError("synthesis.smoothing_sigma must be >= 0");
    if (!(smoothing_truncate > 0.0)) throw ConfigError("synthesis.smoothing_truncate must be > 0");
    if (!(temporal_step_hours > 0.0)) throw ConfigError("synthesis.temporal_step_hours must be > 0");
}

std::size_t SynthesisConfig::level_count() const {
    return static_cast<std::size_t>(std::llround((altitude_ceiling - altitude_floor) / bin_height));
}

std::vector<double> SynthesisConfig::bin_centers() const {
    std::vector<double> c(level_count());
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = altitude_floor + bin_height * static_cast<double>(k);
    return c;
}

BinnedProfile bin_profile(const RadiosondeSounding& sounding, const SynthesisConfig& cfg) {
    cfg.validate();
    const auto& samples = sounding.samples;
    const auto in_window = std::count_if(samples.begin(), samples.end(), [&](const SoundingSample& s) {
        return s.altitude_m >= cfg.altitude_floor && s.altitude_m <= cfg.altitude_ceiling;
    });
    if (in_window < 2)
        throw DataError(fmt::format("station {}: {} sample(s) inside [{}, {}] m, need at least 2", sounding.station_id,
                                    in_window, cfg.altitude_floor, cfg.altitude_ceiling));

    BinnedProfile p;
    p.station_id = sounding.station_id;
    p.location = sounding.location;
    p.bin_centers = cfg.bin_centers();
    const std::size_t n = p.bin_centers.size();
    p.u.assign(n, 0.0);
    p.v.assign(n, 0.0);
    p.fill.assign(n, BinFill::Interpolated);

    const double half = cfg.bin_height / 2.0;
    std::vector<std::size_t> observed;
    for (std::size_t k = 0; k < n; ++k) {
        const double c = p.bin_centers[k];
        const auto lo = std::lower_bound(samples.begin(), samples.end(), c - half,
                                         [](const SoundingSample& s, double z) { return s.altitude_m < z; });
        const SoundingSample* best = nullptr;
        double best_d = 0.0;
        for (auto it = lo; it != samples.end() && it->altitude_m < c + half; ++it) {
            const double d = std::abs(it->altitude_m - c);
            if (!best || d < best_d) {  // strict: ties keep the lower altitude
                best = &*it;
                best_d = d;
            }
        }
        if (best) {
            p.u[k] = best->u;
            p.v[k] = best->v;
            p.fill[k] = BinFill::Observed;
            observed.push_back(k);
        }
    }
    if (observed.empty())
        throw DataError(fmt::format("station {}: no sample falls inside any altitude bin", sounding.station_id));

    for (std::size_t k = 0; k < observed.front(); ++k) {
        p.u[k] = p.u[observed.front()];
        p.v[k] = p.v[observed.front()];
    }
    for (std::size_t k = observed.back() + 1; k < n; ++k) {
        p.u[k] = p.u[observed.back()];
        p.v[k] = p.v[observed.back()];
    }
    for (std::size_t o = 0; o + 1 < observed.size(); ++o) {
        const std::size_t a = observed[o];
        const std::size_t b = observed[o + 1];
        for (std::size_t k = a + 1; k < b; ++k) {
            const double w = (p.bin_centers[k] - p.bin_centers[a]) / (p.bin_centers[b] - p.bin_centers[a]);
            p.u[k] = (1.0 - w) * p.u[a] + w * p.u[b];
            p.v[k] = (1.0 - w) * p.v[a] + w * p.v[b];
        }
    }
    return p;
}

GridAxes synthesis_horizontal_axes(const BoundingBox& box, const SynthesisConfig& cfg) {
    GridAxes ax;
    ax.latitudes = linspace_step(box.lat_min, box.lat_max, cfg.grid_resolution);
    ax.longitudes = linspace_step(box.lon_min, box.lon_max, cfg.grid_resolution);
    return ax;
}

std::vector<std::size_t> nearest_station_map(std::span<const BinnedProfile> profiles,
                                             std::span<const double> latitudes, std::span<const double> longitudes) {
    if (profiles.empty()) throw EmptyInputError("rasterization needs at least one station profile");
    const double lat_lo = latitudes.front(), lat_hi = latitudes.back();
    const double lon_lo = longitudes.front(), lon_hi = longitudes.back();
    std::vector<std::pair<double, double>> seeds;
    seeds.reserve(profiles.size());
    for (const auto& p : profiles)
        seeds.emplace_back(std::clamp(p.location.latitude, lat_lo, lat_hi),
                           std::clamp(p.location.longitude, lon_lo, lon_hi));

    std::vector<std::size_t> owner(latitudes.size() * longitudes.size());
    for (std::size_t r = 0; r < latitudes.size(); ++r)
        for (std::size_t c = 0; c < longitudes.size(); ++c) {
            std::size_t best = 0;
            double best_d = 0.0;
            for (std::size_t s = 0; s < seeds.size(); ++s) {
                const double dl = latitudes[r] - seeds[s].first;
                const double dn = longitudes[c] - seeds[s].second;
                const double d = dl * dl + dn * dn;
                if (s == 0 || d < best_d) {
                    best = s;
                    best_d = d;
                }
            }
            owner[r * longitudes.size() + c] = best;
        }
    return owner;
}

namespace {

WindPlane plane_from_owner(std::span<const BinnedProfile> profiles, std::span<const std::size_t> owner,
                           std::size_t level, std::size_t rows, std::size_t cols) {
    WindPlane out{Plane(rows, cols), Plane(rows, cols)};
    for (std::size_t i = 0; i < owner.size(); ++i) {
        const auto& p = profiles[owner[i]];
        out.u.values[i] = p.u[level];
        out.v.values[i] = p.v[level];
    }
    return out;
}

// Reflect index into [0, n) with the edge sample repeated ("abc|cba").
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
    const auto period = static_cast<std::ptrdiff_t>(2 * n);
    std::ptrdiff_t m = i % period;
    if (m < 0) m += period;
    if (m >= static_cast<std::ptrdiff_t>(n)) m = period - 1 - m;
    return static_cast<std::size_t>(m);
}

}  // namespace

WindPlane rasterize_level(std::span<const BinnedProfile> profiles, std::size_t level_index,
                          std::span<const double> latitudes, std::span<const double> longitudes) {
    const auto owner = nearest_station_map(profiles, latitudes, longitudes);
    for (const auto& p : profiles)
        if (level_index >= p.u.size())
            throw ConfigError(fmt::format("level {} out of range for station {}", level_index, p.station_id));
    return plane_from_owner(profiles, owner, level_index, latitudes.size(), longitudes.size());
}

WindPlane rasterize_level(std::span<const BinnedProfile> profiles, std::size_t level_index,
                          const SynthesisConfig& cfg, const BoundingBox& box) {
    const auto ax = synthesis_horizontal_axes(box, cfg);
    return rasterize_level(profiles, level_index, ax.latitudes, ax.longitudes);
}

Plane smooth_level(const Plane& plane, double sigma, double truncate) {
    if (sigma < 0.0) throw ConfigError("smoothing sigma must be >= 0");
    if (sigma == 0.0 || plane.values.empty()) return plane;

    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(truncate * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const double w = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
        kernel[static_cast<std::size_t>(k + radius)] = w;
        sum += w;
    }
    for (double& w : kernel) w /= sum;

    Plane tmp(plane.rows, plane.cols);
    for (std::size_t r = 0; r < plane.rows; ++r)
        for (std::size_t c = 0; c < plane.cols; ++c) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -radius; k <= radius; ++k)
                acc += kernel[static_cast<std::size_t>(k + radius)] *
                       plane.at(r, reflect_index(static_cast<std::ptrdiff_t>(c) + k, plane.cols));
            tmp.at(r, c) = acc;
        }
    Plane out(plane.rows, plane.cols);
    for (std::size_t r = 0; r < plane.rows; ++r)
        for (std::size_t c = 0; c < plane.cols; ++c) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -radius; k <= radius; ++k)
                acc += kernel[static_cast<std::size_t>(k + radius)] *
                       tmp.at(reflect_index(static_cast<std::ptrdiff_t>(r) + k, plane.rows), c);
            out.at(r, c) = acc;
        }
    return out;
}

WindGrid synthesize_launch(std::span<const RadiosondeSounding> soundings, const SynthesisConfig& cfg,
                           const BoundingBox& box, std::vector<StationIngest>* report) {
    cfg.validate();
    if (soundings.empty()) throw EmptyInputError("no soundings for launch");

    // Station order only matters for exact Voronoi ties; sort so the output
    // does not depend on file discovery order.
    std::vector<const RadiosondeSounding*> ordered;
    for (const auto& s : soundings) ordered.push_back(&s);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto* a, const auto* b) { return a->station_id < b->station_id; });

    std::vector<BinnedProfile> profiles;
    for (const auto* s : ordered) {
        StationIngest ing{s->station_id, s->launch_time, s->samples.size(), 0, 0, false, {}};
        try {
            profiles.push_back(bin_profile(*s, cfg));
            const auto& p = profiles.back();
            ing.observed_bins = static_cast<std::size_t>(std::count(p.fill.begin(), p.fill.end(), BinFill::Observed));
            ing.interpolated_bins = p.fill.size() - ing.observed_bins;
            ing.accepted = true;
        } catch (const DataError& e) {
            ing.message = e.what();
        }
        if (report) report->push_back(std::move(ing));
    }
    if (profiles.empty())
        throw EmptyInputError(fmt::format("no valid soundings at {}", format_utc(soundings.front().launch_time)));

    GridAxes ax = synthesis_horizontal_axes(box, cfg);
    for (double c : cfg.bin_centers()) ax.levels.push_back(Level{c, std::nullopt});
    ax.times = {soundings.front().launch_time};

    const std::size_t rows = ax.latitudes.size();
    const std::size_t cols = ax.longitudes.size();
    const auto owner = nearest_station_map(profiles, ax.latitudes, ax.longitudes);
    std::vector<double> u(ax.cell_count()), v(ax.cell_count());
    for (std::size_t k = 0; k < ax.levels.size(); ++k) {
        WindPlane wp = plane_from_owner(profiles, owner, k, rows, cols);
        const Plane su = smooth_level(wp.u, cfg.smoothing_sigma, cfg.smoothing_truncate);
        const Plane sv = smooth_level(wp.v, cfg.smoothing_sigma, cfg.smoothing_truncate);
        std::copy(su.values.begin(), su.values.end(), u.begin() + static_cast<std::ptrdiff_t>(k * rows * cols));
        std::copy(sv.values.begin(), sv.values.end(), v.begin() + static_cast<std::ptrdiff_t>(k * rows * cols));
    }
    return WindGrid(std::move(ax), std::move(u), std::move(v), GridKind::Synthetic);
}

SynthesisResult synthesize_forecast(std::span<const RadiosondeSounding> soundings, const SynthesisConfig& cfg,
                                    const BoundingBox& box) {
    cfg.validate();
    if (soundings.empty()) throw EmptyInputError("no soundings");

    std::map<UnixSeconds, std::vector<RadiosondeSounding>> by_time;
    for (const auto& s : soundings) by_time[s.launch_time].push_back(s);

    std::vector<StationIngest> stations;
    std::vector<std::string> warnings;
    std::vector<WindGrid> frames;
    for (const auto& [t, group] : by_time) {
        try {
            frames.push_back(synthesize_launch(group, cfg, box, &stations));
        } catch (const EmptyInputError& e) {
            warnings.push_back(fmt::format("dropped launch time {}: {}", format_utc(t), e.what()));
        }
    }
    for (const auto& st : stations)
        if (!st.accepted)
            warnings.push_back(fmt::format("rejected station {} at {}: {}", st.station_id, format_utc(st.launch_time),
                                           st.message));
    if (frames.empty()) throw EmptyInputError("no launch time has a valid sounding");

    GridAxes ax = frames.front().axes();
    ax.times.clear();
    const std::size_t per_frame = frames.front().u().size();
    std::vector<double> u, v;
    u.reserve(per_frame * frames.size());
    v.reserve(per_frame * frames.size());
    for (const auto& f : frames) {
        ax.times.push_back(f.times().front());
        u.insert(u.end(), f.u().begin(), f.u().end());
        v.insert(v.end(), f.v().begin(), f.v().end());
    }
    return {WindGrid(std::move(ax), std::move(u), std::move(v), GridKind::Synthetic), std::move(stations),
            std::move(warnings)};
}

WindGrid densify_time(const WindGrid& grid, double step_hours) {
    const auto& times = grid.times();
    if (times.size() < 2) throw ConfigError("time densification needs at least two frames");
    if (!(step_hours > 0.0)) throw ConfigError("time step must be > 0");
    const double step_s_d = step_hours * 3600.0;
    const auto step_s = static_cast<UnixSeconds>(std::llround(step_s_d));
    if (std::abs(step_s_d - static_cast<double>(step_s)) > 1e-6 || step_s <= 0)
        throw ConfigError("time step must be a whole number of seconds");
    for (std::size_t i = 1; i < times.size(); ++i)
        if ((times[i] - times[i - 1]) % step_s != 0)
            throw ConfigError(fmt::format("step of {} h does not divide the {} h gap after {}", step_hours,
                                          static_cast<double>(times[i] - times[i - 1]) / 3600.0,
                                          format_utc(times[i - 1])));

    const std::size_t frame = grid.u().size() / times.size();
    GridAxes ax = grid.axes();
    ax.times.clear();
    std::vector<double> u, v, alt;
    const bool has_alt = grid.has_cell_altitude();
    auto push_frame = [&](std::size_t t) {
        const auto off = static_cast<std::ptrdiff_t>(t * frame);
        u.insert(u.end(), grid.u().begin() + off, grid.u().begin() + off + static_cast<std::ptrdiff_t>(frame));
        v.insert(v.end(), grid.v().begin() + off, grid.v().begin() + off + static_cast<std::ptrdiff_t>(frame));
        if (has_alt)
            alt.insert(alt.end(), grid.cell_altitude().begin() + off,
                       grid.cell_altitude().begin() + off + static_cast<std::ptrdiff_t>(frame));
    };
    auto lerp_into = [&](std::vector<double>& dst, std::span<const double> src, std::size_t a, double w) {
        for (std::size_t i = 0; i < frame; ++i)
            dst.push_back((1.0 - w) * src[a * frame + i] + w * src[(a + 1) * frame + i]);
    };

    for (std::size_t t = 0; t + 1 < times.size(); ++t) {
        ax.times.push_back(times[t]);
        push_frame(t);
        const UnixSeconds gap = times[t + 1] - times[t];
        for (UnixSeconds s = step_s; s < gap; s += step_s) {
            const double w = static_cast<double>(s) / static_cast<double>(gap);
            ax.times.push_back(times[t] + s);
            lerp_into(u, grid.u(), t, w);
            lerp_into(v, grid.v(), t, w);
            if (has_alt) lerp_into(alt, grid.cell_altitude(), t, w);
        }
    }
    ax.times.push_back(times.back());
    push_frame(times.size() - 1);

    std::optional<std::vector<double>> cell_alt;
    if (has_alt) cell_alt = std::move(alt);
    return WindGrid(std::move(ax), std::move(u), std::move(v), grid.kind(), std::move(cell_alt),
                    std::numeric_limits<double>::infinity());
}

}  // namespace habsk
