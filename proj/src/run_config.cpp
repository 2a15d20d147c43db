#include "habsk/run_config.hpp"

#include <fstream>
#include <map>

#include <fmt/format.h>

#include "habsk/errors.hpp"
#include "habsk/grid_io.hpp"

namespace fs = std::filesystem;

namespace habsk {

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? path : (base / path).lexically_normal();
}

std::vector<GridPairPaths> read_pairs(const json& j, const std::string& path, const fs::path& base) {
    if (!j.is_array()) throw ConfigError(fmt::format("'{}' must be an array", path));
    std::vector<GridPairPaths> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = fmt::format("{}[{}]", path, i);
        StrictObject o(j[i], p);
        GridPairPaths g;
        std::string truth, forecast;
        o.get("name", g.name);
        o.get("truth", truth);
        o.get("forecast", forecast);
        o.finish();
        if (truth.empty() || forecast.empty()) throw ConfigError(fmt::format("'{}' needs truth and forecast", p));
        g.truth = resolve(base, truth);
        g.forecast = resolve(base, forecast);
        if (g.name.empty()) g.name = g.truth.stem().string();
        out.push_back(std::move(g));
    }
    return out;
}

json pairs_json(const std::vector<GridPairPaths>& pairs) {
    json out = json::array();
    for (const auto& p : pairs)
        out.push_back({{"name", p.name}, {"truth", p.truth.generic_string()}, {"forecast", p.forecast.generic_string()}});
    return out;
}

}  // namespace

void RunConfig::validate() const {
    if (workers < 1) throw ConfigError("workers must be >= 1");
    sim.validate();
    reward.validate();
    synth.validate();
    if (synth_region && !(synth_region->lat_min < synth_region->lat_max && synth_region->lon_min < synth_region->lon_max))
        throw ConfigError("synth_region needs lat_min < lat_max and lon_min < lon_max");
    score.validate();
    dqn.validate();
    search.validate();
    if (train.checkpoint_interval < 0) throw ConfigError("train.checkpoint_interval must be >= 0");
    if (eval.episodes_per_month < 1) throw ConfigError("eval.episodes_per_month must be >= 1");
    HistogramSpec hs = HistogramSpec::uniform(eval.histogram_bin_width);
    hs.min_count = eval.min_count;
    hs.zero_threshold = eval.zero_threshold;
    hs.validate();
    if (compare.samples < 1 || compare.score_samples < 1) throw ConfigError("compare sample counts must be >= 1");
    for (const auto& m : months)
        if (m.pairs.empty()) throw ConfigError("month '" + m.month + "' lists no grid pairs");
}

RunConfig parse_run_config(const json& j, const fs::path& base) {
    RunConfig c;
    StrictObject o(j, "");
    std::optional<std::uint64_t> seed;
    if (const auto it = j.find("seed"); it != j.end() && !it->is_null()) {
        if (!it->is_number_unsigned()) throw ConfigError("'seed' must be a non-negative integer");
        seed = it->get<std::uint64_t>();
    }
    std::uint64_t dummy = 0;
    o.get("seed", dummy);
    c.seed = seed;
    o.get("workers", c.workers);
    if (const json* s = o.child("sim")) read_json(*s, c.sim, "sim");
    if (const json* s = o.child("reward")) read_json(*s, c.reward, "reward");
    if (const json* s = o.child("synth")) read_json(*s, c.synth, "synth");
    if (const json* s = o.child("synth_region")) {
        StrictObject r(*s, "synth_region");
        BoundingBox b{};
        r.get("lat_min", b.lat_min);
        r.get("lat_max", b.lat_max);
        r.get("lon_min", b.lon_min);
        r.get("lon_max", b.lon_max);
        r.finish();
        c.synth_region = b;
    }
    if (const json* s = o.child("score")) read_json(*s, c.score, "score");
    if (const json* s = o.child("dqn")) read_json(*s, c.dqn, "dqn");
    if (const json* s = o.child("search")) read_json(*s, c.search, "search");
    if (const json* s = o.child("train")) {
        StrictObject t(*s, "train");
        t.get("randomize_arena", c.train.randomize_arena);
        t.get("checkpoint_interval", c.train.checkpoint_interval);
        t.finish();
    }
    if (const json* s = o.child("eval")) {
        StrictObject e(*s, "eval");
        e.get("episodes_per_month", c.eval.episodes_per_month);
        e.get("randomize_arena", c.eval.randomize_arena);
        e.get("export_trajectories", c.eval.export_trajectories);
        e.get("histogram_bin_width", c.eval.histogram_bin_width);
        e.get("zero_filter", c.eval.zero_filter);
        e.get("zero_threshold", c.eval.zero_threshold);
        e.get("min_count", c.eval.min_count);
        e.finish();
    }
    if (const json* s = o.child("compare")) {
        StrictObject e(*s, "compare");
        e.get("samples", c.compare.samples);
        e.get("score_samples", c.compare.score_samples);
        e.finish();
    }
    if (const json* s = o.child("paths")) {
        StrictObject p(*s, "paths");
        std::string soundings;
        p.get("soundings", soundings);
        if (!soundings.empty()) c.soundings = resolve(base, soundings);
        if (const auto it = s->find("training"); it != s->end()) c.training = read_pairs(*it, "paths.training", base);
        json dummy_arr;
        p.get("training", dummy_arr);
        if (const auto it = s->find("months"); it != s->end()) {
            if (!it->is_array()) throw ConfigError("'paths.months' must be an array");
            for (std::size_t i = 0; i < it->size(); ++i) {
                const std::string mp = fmt::format("paths.months[{}]", i);
                StrictObject mo((*it)[i], mp);
                MonthPaths m;
                mo.get("month", m.month);
                if (const auto pit = (*it)[i].find("pairs"); pit != (*it)[i].end())
                    m.pairs = read_pairs(*pit, mp + ".pairs", base);
                json dummy_pairs;
                mo.get("pairs", dummy_pairs);
                mo.finish();
                if (m.month.empty()) throw ConfigError(fmt::format("'{}' needs a month label", mp));
                c.months.push_back(std::move(m));
            }
        }
        p.get("months", dummy_arr);
        p.finish();
    }
    o.finish();
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("{}: malformed JSON ({})", path.string(), e.what()));
    }
    return parse_run_config(j, path.parent_path());
}

json to_json(const RunConfig& c) {
    json j;
    j["workers"] = c.workers;
    j["sim"] = to_json(c.sim);
    j["reward"] = to_json(c.reward);
    j["synth"] = to_json(c.synth);
    j["synth_region"] = c.synth_region ? json{{"lat_min", c.synth_region->lat_min},
                                              {"lat_max", c.synth_region->lat_max},
                                              {"lon_min", c.synth_region->lon_min},
                                              {"lon_max", c.synth_region->lon_max}}
                                       : json(nullptr);
    j["score"] = to_json(c.score);
    j["dqn"] = to_json(c.dqn);
    j["search"] = to_json(c.search);
    j["train"] = {{"randomize_arena", c.train.randomize_arena}, {"checkpoint_interval", c.train.checkpoint_interval}};
    j["eval"] = {{"episodes_per_month", c.eval.episodes_per_month},
                 {"randomize_arena", c.eval.randomize_arena},
                 {"export_trajectories", c.eval.export_trajectories},
                 {"histogram_bin_width", c.eval.histogram_bin_width},
                 {"zero_filter", c.eval.zero_filter},
                 {"zero_threshold", c.eval.zero_threshold},
                 {"min_count", c.eval.min_count}};
    j["compare"] = {{"samples", c.compare.samples}, {"score_samples", c.compare.score_samples}};
    json months = json::array();
    for (const auto& m : c.months) months.push_back({{"month", m.month}, {"pairs", pairs_json(m.pairs)}});
    j["paths"] = {{"soundings", c.soundings ? json(c.soundings->generic_string()) : json(nullptr)},
                  {"training", pairs_json(c.training)},
                  {"months", std::move(months)}};
    return j;
}

std::string config_hash(const json& canonical) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

GridLibrary load_grid_library(const std::vector<GridPairPaths>& pairs) {
    std::map<std::string, std::shared_ptr<const WindGrid>> cache;
    auto load = [&](const fs::path& p) {
        auto& slot = cache[p.string()];
        if (!slot) slot = std::make_shared<const WindGrid>(read_grid(p));
        return slot;
    };
    GridLibrary lib;
    for (const auto& p : pairs) lib.push_back({p.name, load(p.truth), load(p.forecast)});
    return lib;
}

}  // namespace habsk
