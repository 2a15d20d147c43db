#include "habsk/config_json.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "habsk/errors.hpp"
#include "habsk/timeutil.hpp"

namespace habsk {

StrictObject::StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("'{}' must be an object", path_.empty() ? "config" : path_));
}

const json* StrictObject::find(const char* key) {
    used_.emplace_back(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
}

const json* StrictObject::child(const char* key) {
    const json* v = find(key);
    if (v && !v->is_object()) throw ConfigError(fmt::format("'{}' must be an object", path(key)));
    return v;
}

void StrictObject::throw_type(const char* key, const json& v) const {
    throw ConfigError(fmt::format("'{}' has the wrong type ({})", path(key), v.type_name()));
}

void StrictObject::finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
        if (std::find(used_.begin(), used_.end(), it.key()) == used_.end())
            throw ConfigError(fmt::format("unknown key '{}'", path(it.key().c_str())));
}

std::string to_string(CalmPolicy p) { return p == CalmPolicy::Exclude ? "exclude" : "include"; }

CalmPolicy calm_policy_from_string(const std::string& s) {
    if (s == "exclude") return CalmPolicy::Exclude;
    if (s == "include") return CalmPolicy::Include;
    throw ConfigError("unknown calm policy '" + s + "' (exclude | include)");
}

namespace {

json rate_json(const RateDistribution& r) { return {{"mean", r.mean}, {"sd", r.sd}}; }

void read_rate(const json& j, RateDistribution& r, const std::string& path) {
    StrictObject o(j, path);
    o.get("mean", r.mean);
    o.get("sd", r.sd);
    o.finish();
}

}  // namespace

json to_json(const SimConfig& c) {
    json j;
    j["step_dt"] = c.step_dt;
    j["episode_hours"] = c.episode_hours;
    j["arena"] = {{"center", {{"latitude", c.arena.center.latitude}, {"longitude", c.arena.center.longitude}}},
                  {"width_km", c.arena.width_km},
                  {"height_km", c.arena.height_km},
                  {"floor_m", c.arena.floor_m},
                  {"ceiling_m", c.arena.ceiling_m}};
    j["init_altitude_min"] = c.init_altitude_min;
    j["init_altitude_max"] = c.init_altitude_max;
    j["start_time"] = c.start_time ? json(format_utc(*c.start_time)) : json(nullptr);
    j["actions"] = {{"ascend", rate_json(c.actions.ascend)},
                    {"descend", rate_json(c.actions.descend)},
                    {"stay", rate_json(c.actions.stay)}};
    j["column"] = {{"pressure_min_hpa", c.column.pressure_min_hpa},
                   {"pressure_max_hpa", c.column.pressure_max_hpa},
                   {"altitude_min_m", c.column.altitude_min_m},
                   {"altitude_max_m", c.column.altitude_max_m}};
    return j;
}

void read_json(const json& j, SimConfig& c, const std::string& path) {
    StrictObject o(j, path);
    o.get("step_dt", c.step_dt);
    o.get("episode_hours", c.episode_hours);
    if (const json* a = o.child("arena")) {
        StrictObject ao(*a, o.path("arena"));
        if (const json* ctr = ao.child("center")) {
            StrictObject co(*ctr, ao.path("center"));
            co.get("latitude", c.arena.center.latitude);
            co.get("longitude", c.arena.center.longitude);
            co.finish();
        }
        ao.get("width_km", c.arena.width_km);
        ao.get("height_km", c.arena.height_km);
        ao.get("floor_m", c.arena.floor_m);
        ao.get("ceiling_m", c.arena.ceiling_m);
        ao.finish();
    }
    o.get("init_altitude_min", c.init_altitude_min);
    o.get("init_altitude_max", c.init_altitude_max);
    std::string start;
    o.get("start_time", start);
    if (!start.empty()) {
        try {
            c.start_time = parse_utc(start);
        } catch (const ParseError& e) {
            throw ConfigError(fmt::format("'{}': {}", o.path("start_time"), e.what()));
        }
    }
    if (const json* a = o.child("actions")) {
        StrictObject ao(*a, o.path("actions"));
        if (const json* r = ao.child("ascend")) read_rate(*r, c.actions.ascend, ao.path("ascend"));
        if (const json* r = ao.child("descend")) read_rate(*r, c.actions.descend, ao.path("descend"));
        if (const json* r = ao.child("stay")) read_rate(*r, c.actions.stay, ao.path("stay"));
        ao.finish();
    }
    if (const json* col = o.child("column")) {
        StrictObject co(*col, o.path("column"));
        co.get("pressure_min_hpa", c.column.pressure_min_hpa);
        co.get("pressure_max_hpa", c.column.pressure_max_hpa);
        co.get("altitude_min_m", c.column.altitude_min_m);
        co.get("altitude_max_m", c.column.altitude_max_m);
        co.finish();
    }
    o.finish();
}

json to_json(const RewardConfig& c) {
    return {{"variant", to_string(c.variant)},
            {"rho50_km", c.rho50_km},
            {"rho25_km", c.rho25_km},
            {"c_cliff", c.c_cliff},
            {"tau_km", c.tau_km}};
}

void read_json(const json& j, RewardConfig& c, const std::string& path) {
    StrictObject o(j, path);
    std::string variant;
    o.get("variant", variant);
    if (!variant.empty()) c.variant = reward_variant_from_string(variant);
    o.get("rho50_km", c.rho50_km);
    o.get("rho25_km", c.rho25_km);
    o.get("c_cliff", c.c_cliff);
    o.get("tau_km", c.tau_km);
    o.finish();
}

json to_json(const SynthesisConfig& c) {
    return {{"bin_height", c.bin_height},
            {"altitude_floor", c.altitude_floor},
            {"altitude_ceiling", c.altitude_ceiling},
            {"grid_resolution", c.grid_resolution},
            {"smoothing_sigma", c.smoothing_sigma},
            {"smoothing_truncate", c.smoothing_truncate},
            {"temporal_step_hours", c.temporal_step_hours}};
}

void read_json(const json& j, SynthesisConfig& c, const std::string& path) {
    StrictObject o(j, path);
    o.get("bin_height", c.bin_height);
    o.get("altitude_floor", c.altitude_floor);
    o.get("altitude_ceiling", c.altitude_ceiling);
    o.get("grid_resolution", c.grid_resolution);
    o.get("smoothing_sigma", c.smoothing_sigma);
    o.get("smoothing_truncate", c.smoothing_truncate);
    o.get("temporal_step_hours", c.temporal_step_hours);
    o.finish();
}

json to_json(const ScoreConfig& c) {
    return {{"num_bins", c.num_bins},
            {"center_offset_deg", c.center_offset_deg},
            {"altitude_min", c.altitude_min},
            {"altitude_max", c.altitude_max},
            {"timestamps", c.timestamps},
            {"calm_threshold", c.calm_threshold},
            {"calm_policy", to_string(c.calm_policy)}};
}

void read_json(const json& j, ScoreConfig& c, const std::string& path) {
    StrictObject o(j, path);
    o.get("num_bins", c.num_bins);
    o.get("center_offset_deg", c.center_offset_deg);
    o.get("altitude_min", c.altitude_min);
    o.get("altitude_max", c.altitude_max);
    o.get("timestamps", c.timestamps);
    o.get("calm_threshold", c.calm_threshold);
    std::string calm;
    o.get("calm_policy", calm);
    if (!calm.empty()) c.calm_policy = calm_policy_from_string(calm);
    o.finish();
}

json to_json(const DQNHyperparams& c) {
    return {{"gamma", c.gamma},
            {"learning_rate", c.learning_rate},
            {"batch_size", c.batch_size},
            {"target_update_interval", c.target_update_interval},
            {"epsilon_start", c.epsilon_start},
            {"epsilon_end", c.epsilon_end},
            {"epsilon_decay_fraction", c.epsilon_decay_fraction},
            {"total_steps", c.total_steps},
            {"train_every", c.train_every},
            {"warmup_steps", c.warmup_steps},
            {"replay_capacity", c.replay_capacity},
            {"hidden_layers", c.hidden_layers},
            {"adam_beta1", c.adam_beta1},
            {"adam_beta2", c.adam_beta2},
            {"adam_eps", c.adam_eps},
            {"eval_interval", c.eval_interval},
            {"eval_episodes", c.eval_episodes},
            {"obs_speed_scale", c.obs_speed_scale}};
}

void read_json(const json& j, DQNHyperparams& c, const std::string& path) {
    StrictObject o(j, path);
    o.get("gamma", c.gamma);
    o.get("learning_rate", c.learning_rate);
    o.get("batch_size", c.batch_size);
    o.get("target_update_interval", c.target_update_interval);
    o.get("epsilon_start", c.epsilon_start);
    o.get("epsilon_end", c.epsilon_end);
    o.get("epsilon_decay_fraction", c.epsilon_decay_fraction);
    o.get("total_steps", c.total_steps);
    o.get("train_every", c.train_every);
    o.get("warmup_steps", c.warmup_steps);
    o.get("replay_capacity", c.replay_capacity);
    o.get("hidden_layers", c.hidden_layers);
    o.get("adam_beta1", c.adam_beta1);
    o.get("adam_beta2", c.adam_beta2);
    o.get("adam_eps", c.adam_eps);
    o.get("eval_interval", c.eval_interval);
    o.get("eval_episodes", c.eval_episodes);
    o.get("obs_speed_scale", c.obs_speed_scale);
    o.finish();
}

json to_json(const ObservationNormalizer& c) {
    return {{"altitude_floor", c.altitude_floor},
            {"altitude_ceiling", c.altitude_ceiling},
            {"distance_scale_km", c.distance_scale_km},
            {"bearing_scale_deg", c.bearing_scale_deg},
            {"speed_scale_ms", c.speed_scale_ms}};
}

void read_json(const json& j, ObservationNormalizer& c, const std::string& path) {
    StrictObject o(j, path);
    o.get("altitude_floor", c.altitude_floor);
    o.get("altitude_ceiling", c.altitude_ceiling);
    o.get("distance_scale_km", c.distance_scale_km);
    o.get("bearing_scale_deg", c.bearing_scale_deg);
    o.get("speed_scale_ms", c.speed_scale_ms);
    o.finish();
}

json to_json(const SearchSpace& c) {
    return {{"lr_min", c.lr_min},
            {"lr_max", c.lr_max},
            {"epsilon_start_min", c.epsilon_start_min},
            {"epsilon_start_max", c.epsilon_start_max},
            {"epsilon_end_min", c.epsilon_end_min},
            {"epsilon_end_max", c.epsilon_end_max}};
}

void read_json(const json& j, SearchSpace& c, const std::string& path) {
    StrictObject o(j, path);
    o.get("lr_min", c.lr_min);
    o.get("lr_max", c.lr_max);
    o.get("epsilon_start_min", c.epsilon_start_min);
    o.get("epsilon_start_max", c.epsilon_start_max);
    o.get("epsilon_end_min", c.epsilon_end_min);
    o.get("epsilon_end_max", c.epsilon_end_max);
    o.finish();
}

}  // namespace habsk
