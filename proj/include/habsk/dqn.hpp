#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "habsk/mlp.hpp"
#include "habsk/replay_buffer.hpp"
#include "habsk/rng.hpp"
#include "habsk/sim.hpp"
#include "habsk/wind_grid.hpp"

namespace habsk {

struct DQNHyperparams {
    double gamma = 0.99;
    double learning_rate = 3e-5;
    std::size_t batch_size = 64;
    std::int64_t target_update_interval = 5000;  // env steps
    double epsilon_start = 0.4;
    double epsilon_end = 0.15;
    double epsilon_decay_fraction = 1.0 / 3.0;
    std::int64_t total_steps = 200000;
    std::int64_t train_every = 4;      // env steps per gradient step
    std::int64_t warmup_steps = 10000;  // env steps before the first update
    std::size_t replay_capacity = 500000;
    std::vector<std::size_t> hidden_layers{128, 128};
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::int64_t eval_interval = 10000;  // env steps between learning-curve points
    std::size_t eval_episodes = 20;
    double obs_speed_scale = 20.0;       // m/s, wind magnitudes are divided by this

    void validate() const;
};

/// Linear decay from epsilon_start to epsilon_end over the first
/// total_steps * epsilon_decay_fraction steps, constant afterwards.
double epsilon_at(const DQNHyperparams& hp, std::int64_t step);

/// Fixed affine map from observations to network inputs:
///   altitudes -> (z - floor) / (ceiling - floor)
///   distances -> d / distance_scale (rho50)
///   bearings  -> b / 180
///   speeds    -> s / speed_scale
struct ObservationNormalizer {
    double altitude_floor = 15000.0;
    double altitude_ceiling = 25000.0;
    double distance_scale_km = 50.0;
    double bearing_scale_deg = 180.0;
    double speed_scale_ms = 20.0;

    static ObservationNormalizer from(const SimConfig& sim, const RewardConfig& reward, const DQNHyperparams& hp);

    void encode(const Observation& obs, std::span<float> out) const;
    std::vector<float> encode(const Observation& obs) const;
    /// Inverse of encode(); `flat.size()` must be 3 + 3N.
    Observation decode(std::span<const float> flat) const;

    friend bool operator==(const ObservationNormalizer&, const ObservationNormalizer&) = default;
};

/// Builds an untrained network for observations of length `obs_dim`.
QNetwork make_qnetwork(std::size_t obs_dim, const std::vector<std::size_t>& hidden);

std::array<float, kNumActions> q_forward(const QNetwork& net, std::span<const float> obs);

/// Index of the largest value; ties go to the lowest index.
int argmax_action(std::span<const float> q);

/// Epsilon-greedy: uniform-random action with probability epsilon, else
/// the greedy action. Draws nothing from `rng` when epsilon is 0.
int select_action(const QNetwork& net, std::span<const float> obs, double epsilon, Rng& rng);

/// y_i = r_i for terminal transitions, else r_i + gamma * max_a' Q_target(s'_i, a').
std::vector<float> td_targets(const TransitionBatch& batch, const QNetwork& target, double gamma);

/// One optimizer step on the mean squared TD error. Returns the loss
/// measured before the update. Throws TrainingError on a non-finite loss
/// or gradient, leaving the parameters untouched.
double gradient_step(QNetwork& net, Adam<float>& opt, const TransitionBatch& batch, std::span<const float> targets,
                     double learning_rate);

struct GridPair {
    std::string name;
    std::shared_ptr<const WindGrid> truth;
    std::shared_ptr<const WindGrid> forecast;
};
using GridLibrary = std::vector<GridPair>;

/// One episode drawn from a grid library.
struct EpisodeSpec {
    std::size_t pair = 0;
    SimConfig sim;  // arena centre and start time filled in
    std::uint64_t seed = 0;
};

/// With `randomize` the arena centre is uniform over the region where the
/// whole arena fits inside both grids, and the start time is a whole hour
/// offset such that the episode fits in both grids' time spans. Without it
/// the base configuration is used as is.
EpisodeSpec draw_episode(const GridLibrary& library, const SimConfig& base, bool randomize, Rng& rng);

struct EvalSummary {
    double mean_reward = 0.0;  // mean total episode reward
    double twr25 = 0.0;
    double twr50 = 0.0;
    double twr75 = 0.0;
    std::vector<EpisodeResult> episodes;
};

/// Runs greedy episodes with `net`; episode i is drawn from substream i of `seed`.
EvalSummary evaluate_policy(const QNetwork& net, const ObservationNormalizer& norm, const GridLibrary& library,
                            const SimConfig& sim, const RewardConfig& reward, bool randomize, std::size_t episodes,
                            std::uint64_t seed);

/// Same harness with uniformly random actions, for baselines.
EvalSummary evaluate_random(const GridLibrary& library, const SimConfig& sim, const RewardConfig& reward,
                            bool randomize, std::size_t episodes, std::uint64_t seed);

struct LearningCurvePoint {
    std::int64_t step = 0;
    double mean_reward = 0.0;
    double twr25 = 0.0;
    double twr50 = 0.0;
    double twr75 = 0.0;
    double epsilon = 0.0;
    double loss = 0.0;  // mean loss since the previous point, 0 before learning starts

    friend bool operator==(const LearningCurvePoint&, const LearningCurvePoint&) = default;
};

void write_learning_curve_csv(std::ostream& os, const std::vector<LearningCurvePoint>& curve);

struct TrainerConfig {
    SimConfig sim;
    RewardConfig reward;
    DQNHyperparams hp;
    std::uint64_t seed = 0;
    bool randomize_arena = true;
    std::optional<std::filesystem::path> checkpoint_dir;
    std::int64_t checkpoint_interval = 0;  // env steps; 0 writes only on request
};

class DqnTrainer {
public:
    DqnTrainer(GridLibrary library, TrainerConfig cfg);

    /// Trains until `step()` reaches min(until, total_steps).
    void run(std::int64_t until);
    void run() { run(cfg_.hp.total_steps); }

    std::int64_t step() const noexcept { return step_; }
    std::int64_t episodes() const noexcept { return episodes_; }
    const QNetwork& online() const noexcept { return online_; }
    const QNetwork& target() const noexcept { return target_; }
    const ReplayBuffer& replay() const noexcept { return replay_; }
    const ObservationNormalizer& normalizer() const noexcept { return norm_; }
    const std::vector<LearningCurvePoint>& learning_curve() const noexcept { return curve_; }
    const TrainerConfig& config() const noexcept { return cfg_; }

    /// Writes a full training checkpoint (policy plus optimizer, replay and
    /// episode state) so that resuming continues bit-exactly.
    void save_checkpoint(const std::filesystem::path& dir) const;
    static DqnTrainer resume(const std::filesystem::path& dir, GridLibrary library,
                             std::optional<std::filesystem::path> checkpoint_dir = std::nullopt);

private:
    DqnTrainer(GridLibrary library, TrainerConfig cfg, bool initialize);
    void begin_episode();
    void record_evaluation();

    GridLibrary library_;
    TrainerConfig cfg_;
    ObservationNormalizer norm_;
    std::size_t obs_dim_ = 0;
    QNetwork online_;
    QNetwork target_;
    Adam<float> opt_;
    ReplayBuffer replay_;
    Rng rng_;

    std::int64_t step_ = 0;
    std::int64_t episodes_ = 0;
    double loss_sum_ = 0.0;
    std::int64_t loss_count_ = 0;
    std::vector<LearningCurvePoint> curve_;

    std::optional<EpisodeSpec> episode_;
    std::unique_ptr<Simulator> sim_;
    std::vector<float> obs_;
    TransitionBatch batch_;
};

/// A trained policy as stored in a checkpoint.
struct PolicyBundle {
    QNetwork net;
    ObservationNormalizer normalizer;
    SimConfig sim;
    RewardConfig reward;
    DQNHyperparams hp;
    std::uint64_t seed = 0;
};

PolicyBundle load_policy(const std::filesystem::path& checkpoint_dir);

/// Greedy policy closure over a bundle.
Policy greedy_policy(std::shared_ptr<const PolicyBundle> bundle);

struct SearchSpace {
    double lr_min = 1e-5;
    double lr_max = 1e-4;
    double epsilon_start_min = 0.25;
    double epsilon_start_max = 0.5;
    double epsilon_end_min = 0.10;
    double epsilon_end_max = 0.20;

    void validate() const;
};

struct TrialResult {
    std::size_t index = 0;
    DQNHyperparams hp;
    bool ok = false;
    double score = 0.0;  // final evaluation mean TWR50
    std::string error;
    std::vector<LearningCurvePoint> curve;
};

/// Random search: learning rate log-uniform, epsilon endpoints uniform.
/// Trial i draws from substream i of `seed` and trains with that seed.
/// Failed trials are kept (ok = false) and ranked last. When `out_dir` is
/// set, each trial's configuration and score are written there.
std::vector<TrialResult> hyperparameter_search(const GridLibrary& library, const TrainerConfig& base,
                                               const SearchSpace& space, std::size_t budget, std::uint64_t seed,
                                               const std::optional<std::filesystem::path>& out_dir = std::nullopt);

}  // namespace habsk
