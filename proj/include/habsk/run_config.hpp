#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "habsk/config_json.hpp"
#include "habsk/dqn.hpp"
#include "habsk/evalkit.hpp"
#include "habsk/forecast_score.hpp"
#include "habsk/sim.hpp"
#include "habsk/synth.hpp"

namespace habsk {

struct GridPairPaths {
    std::string name;
    std::filesystem::path truth;
    std::filesystem::path forecast;
};

struct MonthPaths {
    std::string month;
    std::vector<GridPairPaths> pairs;
};

struct TrainSettings {
    bool randomize_arena = true;
    std::int64_t checkpoint_interval = 0;  // env steps, 0 = final checkpoint only
};

struct EvalSettings {
    std::size_t episodes_per_month = 5000;
    bool randomize_arena = true;
    bool export_trajectories = false;
    double histogram_bin_width = 0.1;
    bool zero_filter = true;
    double zero_threshold = 0.2;
    int min_count = 5;
};

struct CompareSettings {
    std::size_t samples = 1000;    // model-difference samples per month
    std::size_t score_samples = 10000;  // zero-score table samples per month
};

/// Everything a run needs, loaded from one JSON document. Relative paths
/// are resolved against the document's directory.
struct RunConfig {
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
    SimConfig sim;
    RewardConfig reward;
    SynthesisConfig synth;
    std::optional<BoundingBox> synth_region;
    ScoreConfig score;
    DQNHyperparams dqn;
    SearchSpace search;
    TrainSettings train;
    EvalSettings eval;
    CompareSettings compare;
    std::optional<std::filesystem::path> soundings;
    std::vector<GridPairPaths> training;  // grid pairs used for training
    std::vector<MonthPaths> months;       // evaluation / comparison months

    /// Checks every section against its module invariants.
    void validate() const;
};

/// Overlays `j` onto defaults. Unknown keys raise ConfigError.
RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical JSON of the effective configuration (seed excluded).
json to_json(const RunConfig& c);

/// FNV-1a 64-bit of the compact canonical dump, as 16 hex digits.
std::string config_hash(const json& canonical);

/// Loads every grid named in a pair list.
GridLibrary load_grid_library(const std::vector<GridPairPaths>& pairs);

}  // namespace habsk
