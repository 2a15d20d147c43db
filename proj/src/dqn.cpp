#include "habsk/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "habsk/errors.hpp"

namespace habsk {

void DQNHyperparams::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("dqn.gamma must lie in (0, 1)");
    if (!(learning_rate > 0.0 && learning_rate < 1.0)) throw ConfigError("dqn.learning_rate must lie in (0, 1)");
    if (batch_size < 1) throw ConfigError("dqn.batch_size must be >= 1");
    if (target_update_interval < 1) throw ConfigError("dqn.target_update_interval must be >= 1");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0)) throw ConfigError("dqn.epsilon_start must lie in [0, 1]");
    if (!(epsilon_end >= 0.0 && epsilon_end <= 1.0)) throw ConfigError("dqn.epsilon_end must lie in [0, 1]");
    if (epsilon_end > epsilon_start) throw ConfigError("dqn.epsilon_end must be <= dqn.epsilon_start");
    if (!(epsilon_decay_fraction > 0.0 && epsilon_decay_fraction <= 1.0))
        throw ConfigError("dqn.epsilon_decay_fraction must lie in (0, 1]");
    if (total_steps < 1) throw ConfigError("dqn.total_steps must be >= 1");
    if (train_every < 1) throw ConfigError("dqn.train_every must be >= 1");
    if (warmup_steps < 0) throw ConfigError("dqn.warmup_steps must be >= 0");
    if (replay_capacity < batch_size) throw ConfigError("dqn.replay_capacity must be >= dqn.batch_size");
    for (std::size_t h : hidden_layers)
        if (h == 0) throw ConfigError("dqn.hidden_layers entries must be >= 1");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("dqn.adam_beta1 must lie in [0, 1)");
    if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("dqn.adam_beta2 must lie in [0, 1)");
    if (!(adam_eps > 0.0)) throw ConfigError("dqn.adam_eps must be > 0");
    if (eval_interval < 1) throw ConfigError("dqn.eval_interval must be >= 1");
    if (eval_episodes < 1) throw ConfigError("dqn.eval_episodes must be >= 1");
    if (!(obs_speed_scale > 0.0)) throw ConfigError("dqn.obs_speed_scale must be > 0");
}

double epsilon_at(const DQNHyperparams& hp, std::int64_t step) {
    // whole steps, so the schedule ends exactly on a step boundary
    const double decay_steps = std::round(static_cast<double>(hp.total_steps) * hp.epsilon_decay_fraction);
    const auto s = static_cast<double>(step);
    if (s >= decay_steps) return hp.epsilon_end;
    return hp.epsilon_start + (hp.epsilon_end - hp.epsilon_start) * (s / decay_steps);
}

ObservationNormalizer ObservationNormalizer::from(const SimConfig& sim, const RewardConfig& reward,
                                                  const DQNHyperparams& hp) {
    ObservationNormalizer n;
    n.altitude_floor = sim.arena.floor_m;
    n.altitude_ceiling = sim.arena.ceiling_m;
    n.distance_scale_km = reward.rho50_km;
    n.speed_scale_ms = hp.obs_speed_scale;
    return n;
}

void ObservationNormalizer::encode(const Observation& obs, std::span<float> out) const {
    if (out.size() != obs.flat_size()) throw ShapeError("normalized observation buffer has the wrong length");
    const double span = altitude_ceiling - altitude_floor;
    auto alt = [&](double z) { return static_cast<float>((z - altitude_floor) / span); };
    out[0] = alt(obs.altitude);
    out[1] = static_cast<float>(obs.relative_distance / distance_scale_km);
    out[2] = static_cast<float>(obs.relative_bearing / bearing_scale_deg);
    std::size_t k = 3;
    for (const auto& e : obs.wind_column) {
        out[k++] = alt(e.altitude_m);
        out[k++] = static_cast<float>(e.magnitude / speed_scale_ms);
        out[k++] = static_cast<float>(e.relative_bearing / bearing_scale_deg);
    }
}

std::vector<float> ObservationNormalizer::encode(const Observation& obs) const {
    std::vector<float> out(obs.flat_size());
    encode(obs, out);
    return out;
}

Observation ObservationNormalizer::decode(std::span<const float> flat) const {
    if (flat.size() < 3 || (flat.size() - 3) % 3 != 0) throw ShapeError("flat observation length must be 3 + 3N");
    const double span = altitude_ceiling - altitude_floor;
    auto alt = [&](float x) { return altitude_floor + static_cast<double>(x) * span; };
    Observation obs;
    obs.altitude = alt(flat[0]);
    obs.relative_distance = static_cast<double>(flat[1]) * distance_scale_km;
    obs.relative_bearing = static_cast<double>(flat[2]) * bearing_scale_deg;
    for (std::size_t k = 3; k < flat.size(); k += 3)
        obs.wind_column.push_back({alt(flat[k]), static_cast<double>(flat[k + 1]) * speed_scale_ms,
                                   static_cast<double>(flat[k + 2]) * bearing_scale_deg});
    return obs;
}

QNetwork make_qnetwork(std::size_t obs_dim, const std::vector<std::size_t>& hidden) {
    std::vector<std::size_t> sizes{obs_dim};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(kNumActions);
    return QNetwork(std::move(sizes));
}

std::array<float, kNumActions> q_forward(const QNetwork& net, std::span<const float> obs) {
    if (net.output_size() != kNumActions) throw ShapeError("Q-network must have one output per action");
    std::array<float, kNumActions> q{};
    net.forward(obs, q);
    return q;
}

int argmax_action(std::span<const float> q) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(q.size()); ++i)
        if (q[static_cast<std::size_t>(i)] > q[static_cast<std::size_t>(best)]) best = i;
    return best;
}

int select_action(const QNetwork& net, std::span<const float> obs, double epsilon, Rng& rng) {
    if (epsilon > 0.0 && rng.uniform01() < epsilon) return static_cast<int>(rng.integer(0, kNumActions - 1));
    const auto q = q_forward(net, obs);
    return argmax_action(q);
}

std::vector<float> td_targets(const TransitionBatch& batch, const QNetwork& target, double gamma) {
    std::vector<float> y(batch.size());
    const std::size_t d = batch.obs_dim;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch.done[i]) {
            y[i] = batch.rewards[i];
            continue;
        }
        const auto q = q_forward(target, {batch.next_obs.data() + i * d, d});
        const float best = *std::max_element(q.begin(), q.end());
        y[i] = static_cast<float>(static_cast<double>(batch.rewards[i]) + gamma * static_cast<double>(best));
    }
    return y;
}

double gradient_step(QNetwork& net, Adam<float>& opt, const TransitionBatch& batch, std::span<const float> targets,
                     double learning_rate) {
    thread_local std::vector<float> grad;
    grad.resize(net.parameter_count());
    const float loss = net.loss_and_gradient(batch.obs, batch.actions, targets, grad);
    bool finite = std::isfinite(loss);
    for (float g : grad) finite = finite && std::isfinite(g);
    if (!finite) {
        float max_param = 0.0f;
        for (float p : net.parameters()) max_param = std::max(max_param, std::abs(p));
        const auto [tmin, tmax] = std::minmax_element(targets.begin(), targets.end());
        throw TrainingError(fmt::format("non-finite loss ({}) at optimizer step {}: batch {}, targets [{}, {}], "
                                        "max |param| {}",
                                        loss, opt.steps() + 1, batch.size(), *tmin, *tmax, max_param));
    }
    opt.step(net.parameters(), grad, learning_rate);
    return loss;
}

EpisodeSpec draw_episode(const GridLibrary& library, const SimConfig& base, bool randomize, Rng& rng) {
    if (library.empty()) throw ConfigError("training needs at least one forecast pair");
    EpisodeSpec spec;
    spec.pair = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(library.size()) - 1));
    spec.sim = base;
    if (randomize) {
        const WindGrid& t = *library[spec.pair].truth;
        const WindGrid& f = *library[spec.pair].forecast;
        const BoundingBox a = t.bounds(), b = f.bounds();
        const double lat_lo = std::max(a.lat_min, b.lat_min), lat_hi = std::min(a.lat_max, b.lat_max);
        const double lon_lo = std::max(a.lon_min, b.lon_min), lon_hi = std::min(a.lon_max, b.lon_max);

        const double half_lat = (base.arena.height_km / 2.0) * 1000.0 / kMetersPerDegree;
        const double clat_lo = lat_lo + half_lat, clat_hi = lat_hi - half_lat;
        if (clat_lo > clat_hi)
            throw CoverageError("latitude", fmt::format("grid pair '{}' is too small in latitude for the arena",
                                                        library[spec.pair].name));
        const double lat = clat_lo == clat_hi ? clat_lo : rng.uniform(clat_lo, clat_hi);
        // Longitude half-width grows towards the poles; take the worst case over the arena.
        const double worst = std::max(std::abs(lat - half_lat), std::abs(lat + half_lat));
        const double half_lon = (base.arena.width_km / 2.0) * 1000.0 / (kMetersPerDegree * std::cos(deg2rad(worst)));
        const double clon_lo = lon_lo + half_lon, clon_hi = lon_hi - half_lon;
        if (clon_lo > clon_hi)
            throw CoverageError("longitude", fmt::format("grid pair '{}' is too small in longitude for the arena",
                                                         library[spec.pair].name));
        const double lon = clon_lo == clon_hi ? clon_lo : rng.uniform(clon_lo, clon_hi);
        spec.sim.arena.center.latitude = lat;
        spec.sim.arena.center.longitude = lon;

        const UnixSeconds t_lo = std::max(t.time_begin(), f.time_begin());
        const UnixSeconds t_hi = std::min(t.time_end(), f.time_end()) - base.episode_seconds();
        if (t_hi < t_lo)
            throw CoverageError("time", fmt::format("grid pair '{}' spans less than one episode",
                                                    library[spec.pair].name));
        const std::int64_t hours = (t_hi - t_lo) / 3600;
        spec.sim.start_time = t_lo + 3600 * rng.integer(0, hours);
    }
    spec.seed = rng.next_u64();
    return spec;
}

namespace {

EvalSummary summarize(std::vector<EpisodeResult> episodes) {
    EvalSummary s;
    for (const auto& e : episodes) {
        s.mean_reward += e.total_reward;
        s.twr25 += e.report.twr25;
        s.twr50 += e.report.twr50;
        s.twr75 += e.report.twr75;
    }
    const auto n = static_cast<double>(episodes.size());
    s.mean_reward /= n;
    s.twr25 /= n;
    s.twr50 /= n;
    s.twr75 /= n;
    s.episodes = std::move(episodes);
    return s;
}

template <typename MakePolicy>
EvalSummary evaluate_with(const GridLibrary& library, const SimConfig& sim, const RewardConfig& reward,
                          bool randomize, std::size_t episodes, std::uint64_t seed, MakePolicy&& make_policy) {
    if (episodes < 1) throw ConfigError("evaluation needs at least one episode");
    std::vector<EpisodeResult> results;
    results.reserve(episodes);
    for (std::size_t i = 0; i < episodes; ++i) {
        Rng rng(substream_seed(seed, i));
        const EpisodeSpec spec = draw_episode(library, sim, randomize, rng);
        const GridPair& pair = library[spec.pair];
        results.push_back(
            run_episode(make_policy(rng), *pair.truth, *pair.forecast, spec.sim, reward, spec.seed));
    }
    return summarize(std::move(results));
}

}  // namespace

EvalSummary evaluate_policy(const QNetwork& net, const ObservationNormalizer& norm, const GridLibrary& library,
                            const SimConfig& sim, const RewardConfig& reward, bool randomize, std::size_t episodes,
                            std::uint64_t seed) {
    return evaluate_with(library, sim, reward, randomize, episodes, seed, [&](Rng&) -> Policy {
        return [&net, &norm, buf = std::vector<float>()](const Observation& obs) mutable {
            buf.resize(obs.flat_size());
            norm.encode(obs, buf);
            return static_cast<Action>(argmax_action(q_forward(net, buf)));
        };
    });
}

EvalSummary evaluate_random(const GridLibrary& library, const SimConfig& sim, const RewardConfig& reward,
                            bool randomize, std::size_t episodes, std::uint64_t seed) {
    return evaluate_with(library, sim, reward, randomize, episodes, seed, [](Rng& rng) -> Policy {
        return [&rng](const Observation&) { return action_from_index(static_cast<int>(rng.integer(0, 2))); };
    });
}

void write_learning_curve_csv(std::ostream& os, const std::vector<LearningCurvePoint>& curve) {
    os << "step,mean_reward,twr25,twr50,twr75,epsilon,loss\n";
    for (const auto& p : curve)
        os << fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6g}\n", p.step, p.mean_reward, p.twr25, p.twr50,
                          p.twr75, p.epsilon, p.loss);
}

DqnTrainer::DqnTrainer(GridLibrary library, TrainerConfig cfg) : DqnTrainer(std::move(library), std::move(cfg), true) {}

DqnTrainer::DqnTrainer(GridLibrary library, TrainerConfig cfg, bool initialize)
    : library_(std::move(library)), cfg_(std::move(cfg)) {
    cfg_.hp.validate();
    cfg_.sim.validate();
    cfg_.reward.validate();
    if (cfg_.checkpoint_interval < 0) throw ConfigError("checkpoint interval must be >= 0");
    if (library_.empty()) throw ConfigError("training needs at least one forecast pair");
    for (const auto& p : library_) {
        if (!p.truth || !p.forecast) throw ConfigError("forecast pair '" + p.name + "' is incomplete");
        const std::size_t dim = 3 + 3 * observation_levels(*p.forecast, cfg_.sim.column).size();
        if (obs_dim_ != 0 && dim != obs_dim_)
            throw ConfigError("forecast grids in the training library select different numbers of column levels");
        obs_dim_ = dim;
    }
    norm_ = ObservationNormalizer::from(cfg_.sim, cfg_.reward, cfg_.hp);
    online_ = make_qnetwork(obs_dim_, cfg_.hp.hidden_layers);
    if (initialize) {
        Rng init(substream_seed(cfg_.seed, 2));
        online_.initialize(init);
    }
    target_ = online_;
    opt_ = Adam<float>(online_.parameter_count(), cfg_.hp.adam_beta1, cfg_.hp.adam_beta2, cfg_.hp.adam_eps);
    replay_ = ReplayBuffer(cfg_.hp.replay_capacity, obs_dim_);
    rng_ = Rng(substream_seed(cfg_.seed, 0));
}

void DqnTrainer::begin_episode() {
    EpisodeSpec spec = draw_episode(library_, cfg_.sim, cfg_.randomize_arena, rng_);
    const GridPair& pair = library_[spec.pair];
    sim_ = std::make_unique<Simulator>(*pair.truth, *pair.forecast, spec.sim, cfg_.reward);
    obs_ = norm_.encode(sim_->reset(spec.seed));
    episode_ = std::move(spec);
    ++episodes_;
}

void DqnTrainer::record_evaluation() {
    const auto seed = substream_seed(substream_seed(cfg_.seed, 1), static_cast<std::uint64_t>(step_));
    const EvalSummary s = evaluate_policy(online_, norm_, library_, cfg_.sim, cfg_.reward, cfg_.randomize_arena,
                                          cfg_.hp.eval_episodes, seed);
    LearningCurvePoint p;
    p.step = step_;
    p.mean_reward = s.mean_reward;
    p.twr25 = s.twr25;
    p.twr50 = s.twr50;
    p.twr75 = s.twr75;
    p.epsilon = epsilon_at(cfg_.hp, step_);
    p.loss = loss_count_ > 0 ? loss_sum_ / static_cast<double>(loss_count_) : 0.0;
    curve_.push_back(p);
    loss_sum_ = 0.0;
    loss_count_ = 0;
}

void DqnTrainer::run(std::int64_t until) {
    const DQNHyperparams& hp = cfg_.hp;
    until = std::min(until, hp.total_steps);
    std::vector<float> next(obs_dim_);
    while (step_ < until) {
        if (!sim_ || sim_->state().done) begin_episode();
        const int a = select_action(online_, obs_, epsilon_at(hp, step_), rng_);
        const StepResult res = sim_->step(action_from_index(a));
        norm_.encode(res.observation, next);
        replay_.push(obs_, a, static_cast<float>(res.reward), next, res.done);
        std::swap(obs_, next);
        ++step_;

        if (step_ > hp.warmup_steps && step_ % hp.train_every == 0 && replay_.size() >= hp.batch_size) {
            replay_.sample(hp.batch_size, rng_, batch_);
            const auto targets = td_targets(batch_, target_, hp.gamma);
            try {
                loss_sum_ += gradient_step(online_, opt_, batch_, targets, hp.learning_rate);
            } catch (const TrainingError& e) {
                throw TrainingError(fmt::format("env step {}: {}", step_, e.what()));
            }
            ++loss_count_;
        }
        if (step_ % hp.target_update_interval == 0) target_ = online_;
        if (step_ % hp.eval_interval == 0 || step_ == hp.total_steps) record_evaluation();
        if (cfg_.checkpoint_dir && cfg_.checkpoint_interval > 0 && step_ % cfg_.checkpoint_interval == 0)
            save_checkpoint(*cfg_.checkpoint_dir);
    }
}

Policy greedy_policy(std::shared_ptr<const PolicyBundle> bundle) {
    return [bundle = std::move(bundle), buf = std::vector<float>()](const Observation& obs) mutable {
        buf.resize(obs.flat_size());
        bundle->normalizer.encode(obs, buf);
        return static_cast<Action>(argmax_action(q_forward(bundle->net, buf)));
    };
}

}  // namespace habsk
