#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "habsk/rng.hpp"
#include "habsk/wind_grid.hpp"

namespace habsk {

enum class Action : int { Descend = 0, Stay = 1, Ascend = 2 };
inline constexpr int kNumActions = 3;

std::string_view to_string(Action a) noexcept;
Action action_from_index(int index);

struct ArenaSpec {
    GeoCoord center;            // station coordinate
    double width_km = 150.0;    // east-west extent
    double height_km = 150.0;   // north-south extent
    double floor_m = 15000.0;
    double ceiling_m = 25000.0;

    void validate() const;
    BoundingBox horizontal_box() const;
};

struct RateDistribution {
    double mean = 0.0;  // m/s, positive up
    double sd = 0.0;
};

/// Vertical-rate distribution per action, applied for one whole step.
struct ActionModel {
    RateDistribution ascend{1.80, 0.14};
    RateDistribution descend{-2.80, 0.30};
    RateDistribution stay{0.00, 1.25};

    const RateDistribution& rate(Action a) const noexcept;
};

/// Which forecast levels make up the observed wind column. Pressure grids
/// select by pressure, altitude grids by nominal altitude.
struct ColumnSelection {
    double pressure_min_hpa = 20.0;
    double pressure_max_hpa = 150.0;
    double altitude_min_m = 15000.0;
    double altitude_max_m = 25000.0;
};

struct SimConfig {
    double step_dt = 60.0;       // s
    double episode_hours = 20.0;
    ArenaSpec arena;
    double init_altitude_min = 15000.0;
    double init_altitude_max = 25000.0;
    std::optional<UnixSeconds> start_time;  // default: first frame of the truth grid
    ActionModel actions;
    ColumnSelection column;

    void validate() const;
    std::size_t episode_steps() const;
    UnixSeconds episode_seconds() const;
};

enum class RewardVariant { Loon, Piecewise, Euclidean };

std::string to_string(RewardVariant v);
RewardVariant reward_variant_from_string(const std::string& s);

struct RewardConfig {
    RewardVariant variant = RewardVariant::Piecewise;
    double rho50_km = 50.0;
    double rho25_km = 25.0;
    double c_cliff = 0.4;
    double tau_km = 100.0;

    void validate() const;
};

/// Distance reward. `delta_km` is the distance to the station.
double reward(double delta_km, const RewardConfig& cfg);

struct WindColumnEntry {
    double altitude_m = 0.0;
    double magnitude = 0.0;         // m/s
    double relative_bearing = 0.0;  // [0, 180]
};

/// Agent-visible slice of the state, built from the forecast grid only.
struct Observation {
    double altitude = 0.0;           // m
    double relative_distance = 0.0;  // km
    double relative_bearing = 0.0;   // [0, 180], 180 = moving straight away
    std::vector<WindColumnEntry> wind_column;

    std::size_t flat_size() const noexcept { return 3 + 3 * wind_column.size(); }
};

struct TrajectoryPoint {
    UnixSeconds time = 0;
    GeoCoord position;
    Action action = Action::Stay;
    double reward = 0.0;
    double distance_km = 0.0;
};

struct EpisodeState {
    GeoCoord position;
    GeoCoord station;
    UnixSeconds start_time = 0;
    UnixSeconds time = 0;
    std::size_t step_index = 0;
    double cumulative_reward = 0.0;
    /// Bearing of the last horizontal displacement; empty when the balloon
    /// did not move on the last step (or has not stepped yet).
    std::optional<double> heading_deg;
    std::vector<TrajectoryPoint> trajectory;
    Rng rng;
    bool done = false;
};

struct StepResult {
    Observation observation;
    double reward = 0.0;
    bool done = false;
};

/// Checks both grids cover the arena box and the episode time window.
void check_coverage(const WindGrid& grid, const SimConfig& cfg, UnixSeconds start, const char* which);

/// Forecast levels used in the observed wind column.
std::vector<std::size_t> observation_levels(const WindGrid& forecast, const ColumnSelection& sel);

/// Builds the observation from the state and the forecast grid.
Observation observe(const EpisodeState& state, const WindGrid& forecast, const SimConfig& cfg,
                    const std::vector<std::size_t>& levels);

struct ResetResult {
    EpisodeState state;
    Observation observation;
};

/// Places the balloon at the arena centre at a uniform-random altitude.
ResetResult reset(const WindGrid& truth, const WindGrid& forecast, const SimConfig& cfg, std::uint64_t episode_seed);

/// Advances one step: sample a vertical rate, advect with the truth wind
/// sampled at the pre-step position and time, score the new distance and
/// rebuild the observation from the forecast.
StepResult step(EpisodeState& state, Action action, const WindGrid& truth, const WindGrid& forecast,
                const SimConfig& cfg, const RewardConfig& reward_cfg);

/// Convenience wrapper bundling grids and configuration for repeated
/// reset/step calls.
class Simulator {
public:
    Simulator(const WindGrid& truth, const WindGrid& forecast, SimConfig cfg, RewardConfig reward_cfg);

    Observation reset(std::uint64_t episode_seed);
    StepResult step(Action a);

    const EpisodeState& state() const noexcept { return state_; }
    EpisodeState& mutable_state() noexcept { return state_; }
    const SimConfig& config() const noexcept { return cfg_; }
    const RewardConfig& reward_config() const noexcept { return reward_cfg_; }
    const std::vector<std::size_t>& levels() const noexcept { return levels_; }
    Observation observation() const { return observe(state_, *forecast_, cfg_, levels_); }

private:
    const WindGrid* truth_;
    const WindGrid* forecast_;
    SimConfig cfg_;
    RewardConfig reward_cfg_;
    std::vector<std::size_t> levels_;
    EpisodeState state_;
};

struct TWRReport {
    double twr25 = 0.0;
    double twr50 = 0.0;
    double twr75 = 0.0;
    std::uint64_t seed = 0;
    std::string month;
    GeoCoord coordinate;
    std::optional<double> forecast_score;
};

/// Fraction of trajectory points within `radius_km` of the station.
double time_within_radius(const std::vector<TrajectoryPoint>& trajectory, double radius_km);

using Policy = std::function<Action(const Observation&)>;

struct EpisodeResult {
    TWRReport report;
    std::vector<TrajectoryPoint> trajectory;
    double total_reward = 0.0;
};

EpisodeResult run_episode(const Policy& policy, const WindGrid& truth, const WindGrid& forecast, const SimConfig& cfg,
                          const RewardConfig& reward_cfg, std::uint64_t seed);

/// CSV columns: time_utc, lat, lon, alt_m, action, reward, distance_km
void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryPoint>& trajectory);

}  // namespace habsk
