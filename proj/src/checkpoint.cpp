#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "habsk/binary_io.hpp"
#include "habsk/config_json.hpp"
#include "habsk/dqn.hpp"
#include "habsk/errors.hpp"

namespace fs = std::filesystem;

namespace habsk {

namespace {

constexpr const char* kFormat = "habsk-dqn-checkpoint";
constexpr int kVersion = 1;
constexpr const char* kWeights = "weights.bin";
constexpr const char* kTrainerState = "trainer_state.bin";
constexpr char kStateMagic[8] = {'H', 'B', 'S', 'K', 'T', 'S', '0', '1'};

json coord_json(const GeoCoord& c) { return json::array({c.latitude, c.longitude, c.altitude}); }

GeoCoord coord_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

json state_json(const EpisodeState& s) {
    json traj = json::array();
    for (const auto& p : s.trajectory)
        traj.push_back({p.time, p.position.latitude, p.position.longitude, p.position.altitude,
                        static_cast<int>(p.action), p.reward, p.distance_km});
    return {{"position", coord_json(s.position)},
            {"station", coord_json(s.station)},
            {"start_time", s.start_time},
            {"time", s.time},
            {"step_index", s.step_index},
            {"cumulative_reward", s.cumulative_reward},
            {"heading_deg", s.heading_deg ? json(*s.heading_deg) : json(nullptr)},
            {"trajectory", std::move(traj)},
            {"rng", s.rng.serialize()},
            {"done", s.done}};
}

EpisodeState state_from(const json& j) {
    EpisodeState s;
    s.position = coord_from(j.at("position"));
    s.station = coord_from(j.at("station"));
    s.start_time = j.at("start_time").get<UnixSeconds>();
    s.time = j.at("time").get<UnixSeconds>();
    s.step_index = j.at("step_index").get<std::size_t>();
    s.cumulative_reward = j.at("cumulative_reward").get<double>();
    if (!j.at("heading_deg").is_null()) s.heading_deg = j.at("heading_deg").get<double>();
    for (const auto& p : j.at("trajectory")) {
        TrajectoryPoint t;
        t.time = p.at(0).get<UnixSeconds>();
        t.position = {p.at(1).get<double>(), p.at(2).get<double>(), p.at(3).get<double>()};
        t.action = action_from_index(p.at(4).get<int>());
        t.reward = p.at(5).get<double>();
        t.distance_km = p.at(6).get<double>();
        s.trajectory.push_back(t);
    }
    s.rng.deserialize(j.at("rng").get<std::string>());
    s.done = j.at("done").get<bool>();
    return s;
}

json curve_json(const std::vector<LearningCurvePoint>& curve) {
    json out = json::array();
    for (const auto& p : curve)
        out.push_back({{"step", p.step},
                       {"mean_reward", p.mean_reward},
                       {"twr25", p.twr25},
                       {"twr50", p.twr50},
                       {"twr75", p.twr75},
                       {"epsilon", p.epsilon},
                       {"loss", p.loss}});
    return out;
}

std::vector<LearningCurvePoint> curve_from(const json& j) {
    std::vector<LearningCurvePoint> out;
    for (const auto& p : j)
        out.push_back({p.at("step").get<std::int64_t>(), p.at("mean_reward").get<double>(),
                       p.at("twr25").get<double>(), p.at("twr50").get<double>(), p.at("twr75").get<double>(),
                       p.at("epsilon").get<double>(), p.at("loss").get<double>()});
    return out;
}

json read_manifest(const fs::path& dir) {
    const fs::path path = dir / "manifest.json";
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint manifest " + path.string());
    json m;
    try {
        m = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(fmt::format("{}: malformed JSON ({})", path.string(), e.what()));
    }
    if (m.value("format", "") != kFormat) throw DataError(path.string() + " is not a checkpoint manifest");
    if (m.value("version", 0) != kVersion) throw DataError(path.string() + ": unsupported checkpoint version");
    return m;
}

std::vector<std::size_t> layer_sizes(const json& m) {
    return m.at("architecture").at("layers").get<std::vector<std::size_t>>();
}

void read_weights(const fs::path& dir, QNetwork& online, QNetwork* target) {
    std::ifstream in(dir / kWeights, std::ios::binary);
    if (!in) throw DataError("cannot open " + (dir / kWeights).string());
    binio::read_f32_into<float>(in, online.parameters());
    if (target) binio::read_f32_into<float>(in, target->parameters());
}

/// Writes into a sibling temporary directory, then swaps it into place so a
/// crash mid-write never destroys the previous checkpoint.
template <typename WriteFn>
void write_atomically(const fs::path& dir, WriteFn&& write) {
    const fs::path tmp = dir.string() + ".tmp";
    const fs::path old = dir.string() + ".old";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    write(tmp);
    fs::remove_all(old);
    if (fs::exists(dir)) fs::rename(dir, old);
    fs::rename(tmp, dir);
    fs::remove_all(old);
}

}  // namespace

void DqnTrainer::save_checkpoint(const fs::path& dir) const {
    json m;
    m["format"] = kFormat;
    m["version"] = kVersion;
    m["architecture"] = {{"layers", online_.sizes()},
                         {"hidden_activation", "relu"},
                         {"output_activation", "identity"},
                         {"dtype", "float32-le"},
                         {"parameter_count", online_.parameter_count()}};
    m["hyperparameters"] = to_json(cfg_.hp);
    m["normalization"] = to_json(norm_);
    m["sim"] = to_json(cfg_.sim);
    m["reward"] = to_json(cfg_.reward);
    m["seed"] = cfg_.seed;
    m["randomize_arena"] = cfg_.randomize_arena;
    m["checkpoint_interval"] = cfg_.checkpoint_interval;
    json grids = json::array();
    for (const auto& p : library_) grids.push_back(p.name);
    m["grids"] = std::move(grids);

    json t;
    t["step"] = step_;
    t["episodes"] = episodes_;
    t["loss_sum"] = loss_sum_;
    t["loss_count"] = loss_count_;
    t["optimizer_steps"] = opt_.steps();
    t["rng"] = rng_.serialize();
    if (episode_ && sim_) {
        t["episode"] = {{"pair", episode_->pair},
                        {"center", {episode_->sim.arena.center.latitude, episode_->sim.arena.center.longitude}},
                        {"start_time", episode_->sim.start_time ? json(*episode_->sim.start_time) : json(nullptr)},
                        {"seed", episode_->seed},
                        {"state", state_json(sim_->state())}};
    } else {
        t["episode"] = nullptr;
    }
    m["training"] = std::move(t);
    m["learning_curve"] = curve_json(curve_);
    m["files"] = {{"weights", kWeights}, {"trainer_state", kTrainerState}};

    write_atomically(dir, [&](const fs::path& out) {
        {
            std::ofstream os(out / "manifest.json");
            os << m.dump(2) << '\n';
            if (!os) throw RuntimeFailure("failed to write checkpoint manifest");
        }
        {
            std::ofstream os(out / kWeights, std::ios::binary);
            binio::write_f32_span<float>(os, online_.parameters());
            binio::write_f32_span<float>(os, target_.parameters());
            if (!os) throw RuntimeFailure("failed to write checkpoint weights");
        }
        {
            std::ofstream os(out / kTrainerState, std::ios::binary);
            os.write(kStateMagic, sizeof kStateMagic);
            binio::write_f32_span<float>(os, opt_.first_moment());
            binio::write_f32_span<float>(os, opt_.second_moment());
            replay_.serialize(os);
            if (!os) throw RuntimeFailure("failed to write trainer state");
        }
    });
}

DqnTrainer DqnTrainer::resume(const fs::path& dir, GridLibrary library, std::optional<fs::path> checkpoint_dir) {
    const json m = read_manifest(dir);
    TrainerConfig cfg;
    try {
        read_json(m.at("sim"), cfg.sim);
        read_json(m.at("reward"), cfg.reward);
        read_json(m.at("hyperparameters"), cfg.hp);
        cfg.seed = m.at("seed").get<std::uint64_t>();
        cfg.randomize_arena = m.at("randomize_arena").get<bool>();
        cfg.checkpoint_interval = m.at("checkpoint_interval").get<std::int64_t>();
    } catch (const json::exception& e) {
        throw DataError(fmt::format("checkpoint manifest is incomplete: {}", e.what()));
    }
    cfg.checkpoint_dir = std::move(checkpoint_dir);

    DqnTrainer t(std::move(library), std::move(cfg), false);
    if (layer_sizes(m) != t.online_.sizes())
        throw DataError("checkpoint architecture does not match the observation size of the supplied grids");
    read_weights(dir, t.online_, &t.target_);

    std::ifstream in(dir / kTrainerState, std::ios::binary);
    if (!in) throw DataError("cannot open " + (dir / kTrainerState).string());
    char magic[sizeof kStateMagic];
    if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kStateMagic))
        throw DataError("trainer state file has a bad header");
    binio::read_f32_into<float>(in, t.opt_.first_moment());
    binio::read_f32_into<float>(in, t.opt_.second_moment());
    t.replay_.deserialize(in);
    if (t.replay_.obs_dim() != t.obs_dim_) throw DataError("replay buffer observation size mismatch");

    const json& tr = m.at("training");
    t.step_ = tr.at("step").get<std::int64_t>();
    t.episodes_ = tr.at("episodes").get<std::int64_t>();
    t.loss_sum_ = tr.at("loss_sum").get<double>();
    t.loss_count_ = tr.at("loss_count").get<std::int64_t>();
    t.opt_.set_steps(tr.at("optimizer_steps").get<std::int64_t>());
    t.rng_.deserialize(tr.at("rng").get<std::string>());
    t.curve_ = curve_from(m.at("learning_curve"));

    const json& ep = tr.at("episode");
    if (!ep.is_null()) {
        EpisodeSpec spec;
        spec.pair = ep.at("pair").get<std::size_t>();
        if (spec.pair >= t.library_.size()) throw DataError("checkpoint refers to a missing forecast pair");
        spec.sim = t.cfg_.sim;
        spec.sim.arena.center.latitude = ep.at("center").at(0).get<double>();
        spec.sim.arena.center.longitude = ep.at("center").at(1).get<double>();
        if (!ep.at("start_time").is_null()) spec.sim.start_time = ep.at("start_time").get<UnixSeconds>();
        spec.seed = ep.at("seed").get<std::uint64_t>();
        const GridPair& pair = t.library_[spec.pair];
        t.sim_ = std::make_unique<Simulator>(*pair.truth, *pair.forecast, spec.sim, t.cfg_.reward);
        t.sim_->mutable_state() = state_from(ep.at("state"));
        t.obs_ = t.norm_.encode(t.sim_->observation());
        t.episode_ = std::move(spec);
    }
    return t;
}

PolicyBundle load_policy(const fs::path& dir) {
    const json m = read_manifest(dir);
    PolicyBundle b;
    try {
        read_json(m.at("sim"), b.sim);
        read_json(m.at("reward"), b.reward);
        read_json(m.at("hyperparameters"), b.hp);
        read_json(m.at("normalization"), b.normalizer);
        b.seed = m.at("seed").get<std::uint64_t>();
        const auto sizes = layer_sizes(m);
        if (sizes.size() < 2 || sizes.back() != static_cast<std::size_t>(kNumActions))
            throw DataError("checkpoint network does not have one output per action");
        b.net = QNetwork(sizes);
    } catch (const json::exception& e) {
        throw DataError(fmt::format("checkpoint manifest is incomplete: {}", e.what()));
    }
    read_weights(dir, b.net, nullptr);
    return b;
}

}  // namespace habsk
