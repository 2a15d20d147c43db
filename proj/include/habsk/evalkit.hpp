#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "habsk/dqn.hpp"
#include "habsk/forecast_score.hpp"
#include "habsk/sim.hpp"
#include "habsk/stats.hpp"

namespace habsk {

struct MonthLibrary {
    std::string month;
    GridLibrary pairs;
};

/// Builds a fresh policy for one episode. Each call must return an
/// independent object so episodes can run on separate threads.
using PolicyFactory = std::function<Policy(std::uint64_t policy_seed)>;

PolicyFactory greedy_policy_factory(std::shared_ptr<const PolicyBundle> bundle);
PolicyFactory random_policy_factory();

struct EvalCampaign {
    std::vector<MonthLibrary> months;
    std::size_t episodes_per_month = 5000;
    std::uint64_t seed = 0;
    SimConfig sim;
    RewardConfig reward;
    ScoreConfig score;
    bool randomize_arena = true;
    unsigned workers = 1;
    bool keep_trajectories = false;
};

struct EpisodeRecord {
    std::string month;
    std::size_t index = 0;
    std::string grid;
    UnixSeconds start_time = 0;
    TWRReport report;  // forecast_score always set
    double total_reward = 0.0;
    std::vector<TrajectoryPoint> trajectory;  // only with keep_trajectories
};

struct MonthSummary {
    std::string month;
    std::size_t episodes = 0;
    MeanStd twr50;
    MeanStd forecast_score;
};

struct CampaignResult {
    std::vector<EpisodeRecord> records;  // month-major, episode index order
    std::vector<MonthSummary> months;
};

/// Runs every month's episodes with the supplied policies and scores the
/// forecast grid at each episode's station over the episode window.
/// Episode i of month m draws from substream (m, i), so results do not
/// depend on the worker count. `on_record` sees records in final order; if
/// an episode fails, the records finished before it are still delivered.
CampaignResult run_campaign(const EvalCampaign& campaign, const PolicyFactory& policies,
                            const std::function<void(const EpisodeRecord&)>& on_record = {});

void write_campaign_summary_csv(std::ostream& os, const std::vector<MonthSummary>& months);
void write_campaign_records_csv(std::ostream& os, const std::vector<EpisodeRecord>& records);

struct HistogramSpec {
    std::vector<double> fs_edges;
    std::vector<double> twr_edges;
    bool zero_filter = true;
    double zero_threshold = 0.2;  // records with FS below this are excluded when filtering
    int min_count = 5;

    /// Edges 0, w, 2w, ..., 1 on both axes.
    static HistogramSpec uniform(double width = 0.1);
    void validate() const;
};

struct JointHistogram {
    std::vector<double> fs_edges;
    std::vector<double> twr_edges;
    /// Raw counts, counts[t][f] for TWR bin t and FS bin f. Every record
    /// falls in exactly one cell; the last bin on each axis is closed.
    std::vector<std::vector<int>> counts;
    /// Filtered view: zero-filtered records removed, then cells below the
    /// minimum count cleared.
    std::vector<std::vector<int>> filtered;
    std::vector<bool> fs_excluded;  // FS bins lying entirely below the zero threshold
    std::size_t total = 0;

    std::size_t fs_bins() const noexcept { return fs_edges.size() - 1; }
    std::size_t twr_bins() const noexcept { return twr_edges.size() - 1; }
};

struct ScoredOutcome {
    double forecast_score = 0.0;
    double twr50 = 0.0;
};

JointHistogram joint_histogram(std::span<const ScoredOutcome> outcomes, const HistogramSpec& spec);
JointHistogram joint_histogram(const std::vector<EpisodeRecord>& records, const HistogramSpec& spec);

/// Matrix CSV: one row per TWR bin (top row = highest TWR), one column per
/// FS bin. Filtered cells are left blank.
void write_histogram_csv(std::ostream& os, const JointHistogram& h, bool filtered = true);

struct CompareSpec {
    std::size_t samples = 1000;
    std::uint64_t seed = 0;
    double angle_min_speed = 1e-9;  // angles are skipped when either speed is below this
    unsigned workers = 1;
};

struct LevelDiff {
    std::size_t level = 0;
    double altitude_m = 0.0;  // mean altitude of the level in grid a
    std::optional<double> pressure_hpa;
    std::size_t matched_level = 0;
    double matched_altitude_m = 0.0;
    std::size_t angle_samples = 0;
    MeanStd angle;      // degrees, folded into [0, 180]
    MeanStd magnitude;  // |speed_b - speed_a|, m/s
};

struct ModelDiffReport {
    std::string label;
    std::size_t samples = 0;
    std::vector<LevelDiff> levels;
    MeanStd angle;
    MeanStd magnitude;
};

/// Pairs each level of `a` with the level of `b` whose mean altitude is
/// nearest, then compares the two winds at randomly sampled (lat, lon,
/// frame) tuples inside the overlap of both grids. Frames come from `a`.
ModelDiffReport compare_models(const WindGrid& a, const WindGrid& b, const CompareSpec& spec,
                               std::string label = {});

/// Per-level mean altitude of a grid (nominal altitude when the grid has no
/// per-cell altitude field).
std::vector<double> mean_level_altitudes(const WindGrid& grid);

void write_model_diff_csv(std::ostream& os, const std::vector<ModelDiffReport>& reports);

struct MonthGridPair {
    std::string month;
    std::shared_ptr<const WindGrid> forecast;
    std::shared_ptr<const WindGrid> synthetic;
};

struct ZeroScoreRow {
    std::string month;
    std::size_t samples = 0;
    double forecast_zero_fraction = 0.0;
    double synthetic_zero_fraction = 0.0;
    MeanStd forecast_filtered;   // scores with zeros removed
    MeanStd synthetic_filtered;
    MeanStd forecast_all;
    MeanStd synthetic_all;
};

/// Scores both grids at identical random (lat, lon, frames) tuples. Month m
/// uses substream m of `seed`.
std::vector<ZeroScoreRow> zero_score_table(const std::vector<MonthGridPair>& months, std::size_t samples,
                                           std::uint64_t seed, const ScoreConfig& cfg, unsigned workers = 1);

void write_zero_score_csv(std::ostream& os, const std::vector<ZeroScoreRow>& rows);

}  // namespace habsk
