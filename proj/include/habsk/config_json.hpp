#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "habsk/dqn.hpp"
#include "habsk/forecast_score.hpp"
#include "habsk/sim.hpp"
#include "habsk/synth.hpp"

namespace habsk {

using json = nlohmann::json;

/// Reads fields out of a JSON object, remembering which keys were used so
/// that leftovers can be rejected. Missing keys keep the caller's default.
class StrictObject {
public:
    StrictObject(const json& j, std::string path);

    template <typename T>
    void get(const char* key, T& out) {
        const json* v = find(key);
        if (!v) return;
        try {
            out = v->get<T>();
        } catch (const json::exception&) {
            throw_type(key, *v);
        }
    }

    /// Sub-object, or nullptr when absent.
    const json* child(const char* key);
    std::string path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    /// Throws ConfigError naming the first unknown key.
    void finish() const;

private:
    const json* find(const char* key);
    [[noreturn]] void throw_type(const char* key, const json& v) const;

    const json& j_;
    std::string path_;
    std::vector<std::string> used_;
};

json to_json(const SimConfig& c);
json to_json(const RewardConfig& c);
json to_json(const SynthesisConfig& c);
json to_json(const ScoreConfig& c);
json to_json(const DQNHyperparams& c);
json to_json(const ObservationNormalizer& c);
json to_json(const SearchSpace& c);

/// Each overlays the keys present in `j` onto `c`; unknown keys and wrong
/// types raise ConfigError. Values are not validated here.
void read_json(const json& j, SimConfig& c, const std::string& path = "sim");
void read_json(const json& j, RewardConfig& c, const std::string& path = "reward");
void read_json(const json& j, SynthesisConfig& c, const std::string& path = "synth");
void read_json(const json& j, ScoreConfig& c, const std::string& path = "score");
void read_json(const json& j, DQNHyperparams& c, const std::string& path = "dqn");
void read_json(const json& j, ObservationNormalizer& c, const std::string& path = "normalization");
void read_json(const json& j, SearchSpace& c, const std::string& path = "search");

std::string to_string(CalmPolicy p);
CalmPolicy calm_policy_from_string(const std::string& s);

}  // namespace habsk
