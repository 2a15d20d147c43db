#include "habsk/sim.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "habsk/errors.hpp"

namespace habsk {

std::string_view to_string(Action a) noexcept {
    switch (a) {
        case Action::Descend: return "descend";
        case Action::Stay: return "stay";
        case Action::Ascend: return "ascend";
    }
    return "?";
}

Action action_from_index(int index) {
    if (index < 0 || index >= kNumActions) throw StateError(fmt::format("invalid action index {}", index));
    return static_cast<Action>(index);
}

void ArenaSpec::validate() const {
    if (!(width_km > 0.0 && height_km > 0.0)) throw ConfigError("arena extents must be positive");
    if (!(floor_m < ceiling_m)) throw ConfigError("arena vertical range needs floor < ceiling");
    if (center.latitude < -90.0 || center.latitude > 90.0) throw ConfigError("arena centre latitude out of range");
}

BoundingBox ArenaSpec::horizontal_box() const {
    const double half_lat = (height_km / 2.0) * 1000.0 / kMetersPerDegree;
    const double half_lon = (width_km / 2.0) * 1000.0 / (kMetersPerDegree * std::cos(deg2rad(center.latitude)));
    return {center.latitude - half_lat, center.latitude + half_lat, center.longitude - half_lon,
            center.longitude + half_lon};
}

const RateDistribution& ActionModel::rate(Action a) const noexcept {
    switch (a) {
        case Action::Ascend: return ascend;
        case Action::Descend: return descend;
        case Action::Stay: break;
    }
    return stay;
}

void SimConfig::validate() const {
    if (!(step_dt > 0.0)) throw ConfigError("sim.step_dt must be > 0");
    if (!(episode_hours > 0.0)) throw ConfigError("sim.episode_hours must be > 0");
    const double steps = episode_hours * 3600.0 / step_dt;
    if (std::abs(steps - std::round(steps)) > 1e-9)
        throw ConfigError("episode length is not a whole number of steps");
    if (std::abs(step_dt - std::round(step_dt)) > 1e-9) throw ConfigError("sim.step_dt must be whole seconds");
    arena.validate();
    if (!(init_altitude_min <= init_altitude_max)) throw ConfigError("initial altitude range needs min <= max");
    if (init_altitude_min < arena.floor_m || init_altitude_max > arena.ceiling_m)
        throw ConfigError("initial altitude range must lie inside the arena vertical range");
    for (const auto* r : {&actions.ascend, &actions.descend, &actions.stay})
        if (!(r->sd >= 0.0) || !std::isfinite(r->mean)) throw ConfigError("action rate distributions need sd >= 0");
}

std::size_t SimConfig::episode_steps() const {
    return static_cast<std::size_t>(std::llround(episode_hours * 3600.0 / step_dt));
}

UnixSeconds SimConfig::episode_seconds() const {
    return static_cast<UnixSeconds>(episode_steps()) * static_cast<UnixSeconds>(std::llround(step_dt));
}

std::string to_string(RewardVariant v) {
    switch (v) {
        case RewardVariant::Loon: return "loon";
        case RewardVariant::Piecewise: return "piecewise";
        case RewardVariant::Euclidean: return "euclidean";
    }
    return "?";
}

RewardVariant reward_variant_from_string(const std::string& s) {
    if (s == "loon") return RewardVariant::Loon;
    if (s == "piecewise") return RewardVariant::Piecewise;
    if (s == "euclidean") return RewardVariant::Euclidean;
    throw ConfigError("unknown reward variant '" + s + "' (loon | piecewise | euclidean)");
}

void RewardConfig::validate() const {
    if (!(rho25_km < rho50_km)) throw ConfigError("reward needs rho25_km < rho50_km");
    if (!(rho25_km > 0.0)) throw ConfigError("reward.rho25_km must be > 0");
    if (!(c_cliff > 0.0 && c_cliff <= 1.0)) throw ConfigError("reward.c_cliff must lie in (0, 1]");
    if (!(tau_km > 0.0)) throw ConfigError("reward.tau_km must be > 0");
}

double reward(double delta_km, const RewardConfig& cfg) {
    const double cliff = cfg.c_cliff * std::exp2(-(delta_km - cfg.rho50_km) / cfg.tau_km);
    switch (cfg.variant) {
        case RewardVariant::Loon: return delta_km < cfg.rho50_km ? 1.0 : cliff;
        case RewardVariant::Piecewise:
            if (delta_km <= cfg.rho25_km) return 2.0;
            if (delta_km <= cfg.rho50_km) return 1.0;
            return cliff;
        case RewardVariant::Euclidean: return delta_km < cfg.rho50_km ? std::abs(delta_km) : cliff;
    }
    return 0.0;
}

void check_coverage(const WindGrid& grid, const SimConfig& cfg, UnixSeconds start, const char* which) {
    const BoundingBox arena = cfg.arena.horizontal_box();
    const BoundingBox g = grid.bounds();
    constexpr double eps = 1e-9;
    if (arena.lat_min < g.lat_min - eps || arena.lat_max > g.lat_max + eps)
        throw CoverageError("latitude", fmt::format("{} grid latitude [{}, {}] does not cover arena [{:.4f}, {:.4f}]",
                                                    which, g.lat_min, g.lat_max, arena.lat_min, arena.lat_max));
    if (arena.lon_min < g.lon_min - eps || arena.lon_max > g.lon_max + eps)
        throw CoverageError("longitude",
                            fmt::format("{} grid longitude [{}, {}] does not cover arena [{:.4f}, {:.4f}]", which,
                                        g.lon_min, g.lon_max, arena.lon_min, arena.lon_max));
    const UnixSeconds end = start + cfg.episode_seconds();
    if (start < grid.time_begin() || end > grid.time_end())
        throw CoverageError("time", fmt::format("{} grid time span [{}, {}] does not cover episode [{}, {}]", which,
                                                format_utc(grid.time_begin()), format_utc(grid.time_end()),
                                                format_utc(start), format_utc(end)));
}

std::vector<std::size_t> observation_levels(const WindGrid& forecast, const ColumnSelection& sel) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < forecast.levels().size(); ++k) {
        const Level& lv = forecast.levels()[k];
        if (lv.pressure_hpa) {
            if (*lv.pressure_hpa >= sel.pressure_min_hpa && *lv.pressure_hpa <= sel.pressure_max_hpa) out.push_back(k);
        } else if (lv.altitude_m >= sel.altitude_min_m && lv.altitude_m <= sel.altitude_max_m) {
            out.push_back(k);
        }
    }
    if (out.empty()) throw ConfigError("wind column selection matches no forecast level");
    return out;
}

Observation observe(const EpisodeState& state, const WindGrid& forecast, const SimConfig& cfg,
                    const std::vector<std::size_t>& levels) {
    (void)cfg;
    Observation obs;
    obs.altitude = state.position.altitude;
    obs.relative_distance = haversine_distance(state.position, state.station);
    const Bearing to_station = bearing_between(state.position, state.station);

    // At the centre every direction leads away from the station.
    if (to_station.coincident)
        obs.relative_bearing = 180.0;
    else if (!state.heading_deg)
        obs.relative_bearing = 90.0;
    else
        obs.relative_bearing = fold_angle(*state.heading_deg, to_station.degrees);

    thread_local std::vector<ColumnSample> column;
    sample_column(forecast, state.position.latitude, state.position.longitude, state.time, column);
    obs.wind_column.reserve(levels.size());
    for (std::size_t k : levels) {
        const auto& c = column[k];
        WindColumnEntry e;
        e.altitude_m = c.altitude_m;
        e.magnitude = c.wind.magnitude();
        e.relative_bearing = to_station.coincident ? 180.0 : fold_angle(c.wind.bearing(), to_station.degrees);
        obs.wind_column.push_back(e);
    }
    return obs;
}

ResetResult reset(const WindGrid& truth, const WindGrid& forecast, const SimConfig& cfg, std::uint64_t episode_seed) {
    cfg.validate();
    const UnixSeconds start = cfg.start_time.value_or(truth.time_begin());
    check_coverage(truth, cfg, start, "truth");
    check_coverage(forecast, cfg, start, "forecast");

    ResetResult r;
    EpisodeState& s = r.state;
    s.rng = Rng(episode_seed);
    s.station = cfg.arena.center;
    s.station.altitude = 0.0;
    s.position = cfg.arena.center;
    s.position.altitude = s.rng.uniform(cfg.init_altitude_min, cfg.init_altitude_max);
    if (cfg.init_altitude_min == cfg.init_altitude_max) s.position.altitude = cfg.init_altitude_min;
    s.start_time = start;
    s.time = start;
    s.trajectory.reserve(cfg.episode_steps());
    r.observation = observe(s, forecast, cfg, observation_levels(forecast, cfg.column));
    return r;
}

namespace {

StepResult step_impl(EpisodeState& s, Action action, const WindGrid& truth, const WindGrid& forecast,
                     const SimConfig& cfg, const RewardConfig& reward_cfg, const std::vector<std::size_t>& levels) {
    if (s.done) throw StateError("step called on a finished episode");
    const RateDistribution& rd = cfg.actions.rate(action);
    const double rate = s.rng.normal(rd.mean, rd.sd);

    const WindVector wind = sample_wind(truth, s.position, s.time);
    GeoCoord next = displace(s.position, wind, cfg.step_dt);
    next.altitude = std::clamp(s.position.altitude + rate * cfg.step_dt, cfg.arena.floor_m, cfg.arena.ceiling_m);
    s.position = next;
    if (wind.magnitude() > 0.0)
        s.heading_deg = wind.bearing();
    else
        s.heading_deg.reset();
    s.time += static_cast<UnixSeconds>(std::llround(cfg.step_dt));
    ++s.step_index;

    const double dist = haversine_distance(s.position, s.station);
    const double r = reward(dist, reward_cfg);
    s.cumulative_reward += r;
    s.trajectory.push_back({s.time, s.position, action, r, dist});
    s.done = s.step_index >= cfg.episode_steps();

    StepResult out;
    out.reward = r;
    out.done = s.done;
    out.observation = observe(s, forecast, cfg, levels);
    return out;
}

}  // namespace

StepResult step(EpisodeState& state, Action action, const WindGrid& truth, const WindGrid& forecast,
                const SimConfig& cfg, const RewardConfig& reward_cfg) {
    return step_impl(state, action, truth, forecast, cfg, reward_cfg, observation_levels(forecast, cfg.column));
}

Simulator::Simulator(const WindGrid& truth, const WindGrid& forecast, SimConfig cfg, RewardConfig reward_cfg)
    : truth_(&truth), forecast_(&forecast), cfg_(std::move(cfg)), reward_cfg_(reward_cfg) {
    cfg_.validate();
    reward_cfg_.validate();
    levels_ = observation_levels(forecast, cfg_.column);
    state_.done = true;
}

Observation Simulator::reset(std::uint64_t episode_seed) {
    auto r = habsk::reset(*truth_, *forecast_, cfg_, episode_seed);
    state_ = std::move(r.state);
    return std::move(r.observation);
}

StepResult Simulator::step(Action a) {
    return step_impl(state_, a, *truth_, *forecast_, cfg_, reward_cfg_, levels_);
}

double time_within_radius(const std::vector<TrajectoryPoint>& trajectory, double radius_km) {
    if (trajectory.empty()) return 0.0;
    const auto n = std::count_if(trajectory.begin(), trajectory.end(),
                                 [&](const TrajectoryPoint& p) { return p.distance_km <= radius_km; });
    return static_cast<double>(n) / static_cast<double>(trajectory.size());
}

EpisodeResult run_episode(const Policy& policy, const WindGrid& truth, const WindGrid& forecast, const SimConfig& cfg,
                          const RewardConfig& reward_cfg, std::uint64_t seed) {
    Simulator sim(truth, forecast, cfg, reward_cfg);
    Observation obs = sim.reset(seed);
    while (!sim.state().done) obs = sim.step(policy(obs)).observation;

    EpisodeResult out;
    out.trajectory = sim.state().trajectory;
    out.total_reward = sim.state().cumulative_reward;
    out.report.twr25 = time_within_radius(out.trajectory, 25.0);
    out.report.twr50 = time_within_radius(out.trajectory, 50.0);
    out.report.twr75 = time_within_radius(out.trajectory, 75.0);
    out.report.seed = seed;
    out.report.coordinate = cfg.arena.center;
    return out;
}

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryPoint>& trajectory) {
    os << "time_utc,lat,lon,alt_m,action,reward,distance_km\n";
    for (const auto& p : trajectory)
        os << fmt::format("{},{:.6f},{:.6f},{:.2f},{},{:.6g},{:.4f}\n", format_utc(p.time), p.position.latitude,
                          p.position.longitude, p.position.altitude, to_string(p.action), p.reward, p.distance_km);
}

}  // namespace habsk
