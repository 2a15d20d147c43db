#include "habsk/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "habsk/errors.hpp"
#include "habsk/evalkit.hpp"
#include "habsk/grid_io.hpp"
#include "habsk/run_config.hpp"
#include "habsk/sounding.hpp"
#include "habsk/synth.hpp"

namespace fs = std::filesystem;

namespace habsk {

namespace {

#ifndef HABSK_VERSION
#define HABSK_VERSION "dev"
#endif

struct Common {
    std::string config;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::string out;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* workers_opt = nullptr;
};

void add_common(CLI::App* app, Common& c, const std::string& default_out) {
    app->add_option("--config,-c", c.config, "JSON run configuration");
    c.seed_opt = app->add_option("--seed", c.seed, "Master seed (drawn from entropy when omitted)");
    c.workers_opt = app->add_option("--workers", c.workers, "Worker threads (1 = reference mode)")->check(CLI::PositiveNumber);
    c.out = default_out;
    app->add_option("--out,-o", c.out, "Output directory")->capture_default_str();
}

RunConfig load_config(const Common& c) {
    RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
    if (c.workers_opt->count()) cfg.workers = c.workers;
    return cfg;
}

std::uint64_t resolve_seed(const Common& c, const RunConfig& cfg) {
    if (c.seed_opt->count()) return c.seed;
    if (cfg.seed) return *cfg.seed;
    return entropy_seed();
}

struct Meta {
    std::string command;
    std::string hash;
    std::uint64_t seed = 0;

    json to_json() const {
        return {{"tool", "habsk"}, {"version", HABSK_VERSION}, {"command", command}, {"config_hash", hash}, {"seed", seed}};
    }
    std::string csv_line() const {
        return fmt::format("# tool=habsk version={} command={} config_hash={} seed={}\n", HABSK_VERSION, command, hash,
                           seed);
    }
};

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw RuntimeFailure("cannot write " + p.string());
    return os;
}

void write_json_file(const fs::path& p, const json& j) {
    auto os = open_out(p);
    os << j.dump(2) << '\n';
}

std::string stamp(UnixSeconds t) {
    const std::string s = format_utc(t);  // YYYY-MM-DDTHH:MM:SSZ
    return s.substr(0, 4) + s.substr(5, 2) + s.substr(8, 2) + s.substr(11, 2);
}

WindGrid slice_frame(const WindGrid& g, std::size_t t) {
    GridAxes ax = g.axes();
    ax.times = {g.times()[t]};
    const std::size_t n = ax.cell_count();
    const auto off = static_cast<std::ptrdiff_t>(t * n);
    std::vector<double> u(g.u().begin() + off, g.u().begin() + off + static_cast<std::ptrdiff_t>(n));
    std::vector<double> v(g.v().begin() + off, g.v().begin() + off + static_cast<std::ptrdiff_t>(n));
    return WindGrid(std::move(ax), std::move(u), std::move(v), g.kind());
}

BoundingBox auto_region(const std::vector<RadiosondeSounding>& soundings, double res) {
    BoundingBox b{1e9, -1e9, 1e9, -1e9};
    for (const auto& s : soundings) {
        b.lat_min = std::min(b.lat_min, s.location.latitude);
        b.lat_max = std::max(b.lat_max, s.location.latitude);
        b.lon_min = std::min(b.lon_min, s.location.longitude);
        b.lon_max = std::max(b.lon_max, s.location.longitude);
    }
    auto down = [&](double x) { return std::floor((x - 1.0) / res) * res; };
    auto up = [&](double x) { return std::ceil((x + 1.0) / res) * res; };
    return {down(b.lat_min), up(b.lat_max), down(b.lon_min), up(b.lon_max)};
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    Common common;
    std::string soundings;
    bool csv = false;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    RunConfig cfg = load_config(a.common);
    if (!a.soundings.empty()) cfg.soundings = fs::path(a.soundings);
    cfg.validate();
    if (!cfg.soundings) throw ConfigError("no sounding directory given (argument or paths.soundings)");
    const fs::path dir = *cfg.soundings;
    if (!fs::is_directory(dir)) throw DataError("sounding directory " + dir.string() + " does not exist");

    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw EmptyInputError("no soundings found in " + dir.string());

    std::vector<RadiosondeSounding> soundings;
    for (const auto& f : files) {
        try {
            soundings.push_back(read_sounding_file(f));
        } catch (const ParseError& e) {
            throw ParseError(f.filename().string() + ": " + e.what(), e.line());
        }
    }
    const BoundingBox region = cfg.synth_region.value_or(auto_region(soundings, cfg.synth.grid_resolution));
    SynthesisResult res = synthesize_forecast(soundings, cfg.synth, region);

    json canon = {{"synth", to_json(cfg.synth)},
                  {"region", {region.lat_min, region.lat_max, region.lon_min, region.lon_max}}};
    json inputs = json::array();
    for (const auto& f : files) inputs.push_back(f.filename().string());
    canon["inputs"] = inputs;
    const Meta meta{"synth", config_hash(canon), 0};

    const fs::path od(a.common.out);
    fs::create_directories(od);
    const auto enc = a.csv ? PayloadEncoding::Csv : PayloadEncoding::Float32LE;
    json written = json::array();
    for (std::size_t t = 0; t < res.grid.times().size(); ++t) {
        const fs::path p = od / fmt::format("synthetic_{}.json", stamp(res.grid.times()[t]));
        write_grid(slice_frame(res.grid, t), p, enc, meta.to_json());
        written.push_back(p.filename().string());
    }
    const WindGrid series = res.grid.times().size() > 1 ? densify_time(res.grid, cfg.synth.temporal_step_hours) : res.grid;
    write_grid(series, od / "synthetic_series.json", enc, meta.to_json());
    written.push_back("synthetic_series.json");

    json stations = json::array();
    for (const auto& s : res.stations) {
        stations.push_back({{"station_id", s.station_id},
                            {"launch_time", format_utc(s.launch_time)},
                            {"samples", s.samples},
                            {"observed_bins", s.observed_bins},
                            {"interpolated_bins", s.interpolated_bins},
                            {"accepted", s.accepted},
                            {"message", s.message}});
        out << fmt::format("{} {} {:>5} samples  {:>2} observed / {:>2} interpolated bins  {}\n", s.station_id,
                           format_utc(s.launch_time), s.samples, s.observed_bins, s.interpolated_bins,
                           s.accepted ? "ok" : "rejected: " + s.message);
    }
    for (const auto& w : res.warnings) out << "warning: " << w << '\n';
    out << fmt::format("{} levels, {} x {} cells, {} launch times, {} series frames -> {}\n", cfg.synth.level_count(),
                       res.grid.latitudes().size(), res.grid.longitudes().size(), res.grid.times().size(),
                       series.times().size(), od.string());
    write_json_file(od / "synth_report.json", {{"metadata", meta.to_json()},
                                               {"levels", cfg.synth.level_count()},
                                               {"region", canon["region"]},
                                               {"stations", stations},
                                               {"warnings", res.warnings},
                                               {"files", written}});
    return kExitOk;
}

// ---------------------------------------------------------------- score

struct ScoreArgs {
    Common common;
    std::string grid;
    std::string paired;
    std::optional<double> lat, lon;
    std::size_t random = 0;
    std::string start;
    bool keep_zero = false;
    CLI::Option* out_opt = nullptr;
};

json score_json(const ForecastScore& fs) {
    json hist = json::array();
    for (const auto& h : fs.histograms) hist.push_back({{"counts", h.counts}, {"levels_counted", h.levels_counted}});
    return {{"value", fs.value}, {"per_timestamp", fs.per_timestamp}, {"histograms", hist},
            {"kind", to_string(fs.source_kind)}};
}

json dist_json(const ScoreDistribution& d, const std::vector<double>& all) {
    const MeanStd ms = mean_std(all);
    return {{"zero_fraction", d.zero_fraction}, {"nonzero_count", d.scores.size()}, {"mean_nonzero", d.mean},
            {"sd_nonzero", d.stddev}, {"mean_all", ms.mean}, {"sd_all", ms.stddev}};
}

int cmd_score(const ScoreArgs& a, std::ostream& out) {
    RunConfig cfg = load_config(a.common);
    cfg.validate();
    const bool coordinate = a.lat.has_value() || a.lon.has_value();
    if (coordinate == (a.random > 0)) throw ConfigError("give either --lat/--lon or --random N");
    if (coordinate && !(a.lat && a.lon)) throw ConfigError("--lat and --lon go together");

    const WindGrid grid = read_grid(a.grid);
    std::optional<WindGrid> paired;
    if (!a.paired.empty()) paired = read_grid(a.paired);

    const std::uint64_t seed = coordinate ? 0 : resolve_seed(a.common, cfg);
    json canon = {{"score", to_json(cfg.score)},
                  {"grid", fs::path(a.grid).filename().string()},
                  {"paired", a.paired.empty() ? json(nullptr) : json(fs::path(a.paired).filename().string())}};
    if (coordinate) canon["coordinate"] = {*a.lat, *a.lon, a.start};
    else canon["random"] = {a.random, !a.keep_zero};
    const Meta meta{"score", config_hash(canon), seed};

    const bool to_dir = a.out_opt->count() > 0;
    const fs::path od(a.common.out);
    if (to_dir) fs::create_directories(od);

    if (coordinate) {
        const GeoCoord where{*a.lat, *a.lon, 0.0};
        std::size_t first = 0;
        if (!a.start.empty()) {
            const UnixSeconds t0 = parse_utc(a.start);
            const auto it = std::lower_bound(grid.times().begin(), grid.times().end(), t0);
            if (it == grid.times().end()) throw CoverageError("time", "--start lies after the last grid frame");
            first = static_cast<std::size_t>(it - grid.times().begin());
        }
        const std::size_t n = std::min(cfg.score.timestamps, grid.times().size() - first);
        std::vector<UnixSeconds> times(grid.times().begin() + static_cast<std::ptrdiff_t>(first),
                                       grid.times().begin() + static_cast<std::ptrdiff_t>(first + n));
        const SampleOptions strict{false};
        json j = {{"metadata", meta.to_json()},
                  {"coordinate", {{"latitude", *a.lat}, {"longitude", *a.lon}}},
                  {"times", json::array()}};
        for (UnixSeconds t : times) j["times"].push_back(format_utc(t));
        j["primary"] = score_json(forecast_score(grid, where, times, cfg.score, strict));
        if (paired) j["paired"] = score_json(forecast_score(*paired, where, times, cfg.score, strict));
        if (to_dir)
            write_json_file(od / "score.json", j);
        else
            out << j.dump(2) << '\n';
        return kExitOk;
    }

    const auto d = score_distribution(grid, a.random, seed, cfg.score, !a.keep_zero, paired ? &*paired : nullptr,
                                      cfg.workers);
    std::vector<double> prim, pair;
    for (const auto& s : d.samples) {
        prim.push_back(s.primary);
        if (s.paired) pair.push_back(*s.paired);
    }
    json j = {{"metadata", meta.to_json()}, {"samples", a.random}, {"primary", dist_json(d.primary, prim)}};
    if (d.paired) j["paired"] = dist_json(*d.paired, pair);
    if (to_dir) {
        write_json_file(od / "score_summary.json", j);
        auto os = open_out(od / "score_samples.csv");
        os << meta.csv_line() << "index,latitude,longitude,start_utc,primary" << (paired ? ",paired" : "") << '\n';
        for (std::size_t i = 0; i < d.samples.size(); ++i) {
            const auto& s = d.samples[i];
            os << fmt::format("{},{:.6f},{:.6f},{},{:.6f}", i, s.coordinate.latitude, s.coordinate.longitude,
                              format_utc(s.times.front()), s.primary);
            if (s.paired) os << fmt::format(",{:.6f}", *s.paired);
            os << '\n';
        }
    } else {
        out << j.dump(2) << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    Common common;
    std::int64_t steps = 0;
    std::int64_t stop_after = 0;
    std::string resume;
};

json train_canon(const TrainerConfig& tc, const GridLibrary& lib) {
    json names = json::array();
    for (const auto& p : lib) names.push_back(p.name);
    return {{"sim", to_json(tc.sim)},
            {"reward", to_json(tc.reward)},
            {"dqn", to_json(tc.hp)},
            {"randomize_arena", tc.randomize_arena},
            {"grids", names}};
}

void write_train_outputs(const DqnTrainer& t, const fs::path& od, const Meta& meta) {
    t.save_checkpoint(od / "checkpoint");
    auto os = open_out(od / "learning_curve.csv");
    os << meta.csv_line();
    write_learning_curve_csv(os, t.learning_curve());
    write_json_file(od / "train_metadata.json", {{"metadata", meta.to_json()},
                                                 {"steps", t.step()},
                                                 {"episodes", t.episodes()},
                                                 {"total_steps", t.config().hp.total_steps},
                                                 {"complete", t.step() >= t.config().hp.total_steps}});
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
    RunConfig cfg = load_config(a.common);
    if (a.steps > 0) cfg.dqn.total_steps = a.steps;
    cfg.validate();  // before any grid is loaded or step taken
    if (cfg.training.empty()) throw ConfigError("paths.training lists no grid pairs");
    const fs::path od(a.common.out);

    GridLibrary lib = load_grid_library(cfg.training);
    std::optional<DqnTrainer> trainer;
    if (!a.resume.empty()) {
        trainer.emplace(DqnTrainer::resume(a.resume, std::move(lib), od / "checkpoint"));
        if (a.common.seed_opt->count() && a.common.seed != trainer->config().seed)
            throw ConfigError("--seed differs from the seed stored in the checkpoint");
    } else {
        TrainerConfig tc;
        tc.sim = cfg.sim;
        tc.reward = cfg.reward;
        tc.hp = cfg.dqn;
        tc.seed = resolve_seed(a.common, cfg);
        tc.randomize_arena = cfg.train.randomize_arena;
        tc.checkpoint_interval = cfg.train.checkpoint_interval;
        tc.checkpoint_dir = od / "checkpoint";
        trainer.emplace(std::move(lib), tc);
    }
    fs::create_directories(od);
    const TrainerConfig& tc = trainer->config();
    GridLibrary names;
    for (const auto& p : cfg.training) names.push_back({p.name, nullptr, nullptr});
    const Meta meta{"train", config_hash(train_canon(tc, names)), tc.seed};

    const std::int64_t until = a.stop_after > 0 ? a.stop_after : tc.hp.total_steps;
    trainer->run(until);
    write_train_outputs(*trainer, od, meta);
    const auto& curve = trainer->learning_curve();
    out << fmt::format("trained {} steps ({} episodes), seed {}", trainer->step(), trainer->episodes(), tc.seed);
    if (!curve.empty())
        out << fmt::format(", last eval: mean reward {:.3f}, TWR50 {:.3f}", curve.back().mean_reward,
                           curve.back().twr50);
    out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    Common common;
    std::string checkpoint;
    std::size_t episodes = 0;
    bool export_trajectories = false;
};

std::vector<MonthLibrary> load_months(const RunConfig& cfg) {
    if (cfg.months.empty()) throw ConfigError("paths.months lists no evaluation months");
    std::vector<MonthLibrary> out;
    for (const auto& m : cfg.months) out.push_back({m.month, load_grid_library(m.pairs)});
    return out;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    RunConfig cfg = load_config(a.common);
    if (a.episodes > 0) cfg.eval.episodes_per_month = a.episodes;
    if (a.export_trajectories) cfg.eval.export_trajectories = true;
    cfg.validate();
    auto bundle = std::make_shared<const PolicyBundle>(load_policy(a.checkpoint));

    EvalCampaign c;
    c.months = load_months(cfg);
    c.episodes_per_month = cfg.eval.episodes_per_month;
    c.seed = resolve_seed(a.common, cfg);
    c.sim = cfg.sim;
    c.reward = cfg.reward;
    c.score = cfg.score;
    c.randomize_arena = cfg.eval.randomize_arena;
    c.workers = cfg.workers;
    c.keep_trajectories = cfg.eval.export_trajectories;

    json canon = to_json(cfg);
    canon.erase("workers");
    canon["checkpoint_weights"] = config_hash(json(std::vector<float>(bundle->net.parameters().begin(),
                                                                      bundle->net.parameters().end())));
    const Meta meta{"eval", config_hash(canon), c.seed};

    const fs::path od(a.common.out);
    fs::create_directories(od);
    if (c.keep_trajectories) fs::create_directories(od / "trajectories");
    auto records_os = open_out(od / "records.csv");
    records_os << meta.csv_line();
    std::ostringstream header;
    write_campaign_records_csv(header, {});
    records_os << header.str();
    auto on_record = [&](const EpisodeRecord& r) {
        std::ostringstream row;
        write_campaign_records_csv(row, {r});
        const std::string s = row.str();
        records_os << s.substr(s.find('\n') + 1) << std::flush;
        if (c.keep_trajectories) {
            auto ts = open_out(od / "trajectories" / fmt::format("{}_{:05}.csv", r.month, r.index));
            ts << meta.csv_line();
            write_trajectory_csv(ts, r.trajectory);
        }
    };
    const CampaignResult res = run_campaign(c, greedy_policy_factory(bundle), on_record);

    {
        auto os = open_out(od / "summary.csv");
        os << meta.csv_line();
        write_campaign_summary_csv(os, res.months);
    }
    HistogramSpec hs = HistogramSpec::uniform(cfg.eval.histogram_bin_width);
    hs.zero_filter = cfg.eval.zero_filter;
    hs.zero_threshold = cfg.eval.zero_threshold;
    hs.min_count = cfg.eval.min_count;
    json months = json::array();
    for (const auto& m : res.months) {
        std::vector<EpisodeRecord> sub;
        for (const auto& r : res.records)
            if (r.month == m.month) sub.push_back(r);
        const JointHistogram h = joint_histogram(sub, hs);
        auto os = open_out(od / fmt::format("heatmap_{}.csv", m.month));
        os << meta.csv_line();
        write_histogram_csv(os, h, true);
        auto raw = open_out(od / fmt::format("heatmap_{}_raw.csv", m.month));
        raw << meta.csv_line();
        write_histogram_csv(raw, h, false);
        months.push_back({{"month", m.month},
                          {"episodes", m.episodes},
                          {"twr50_mean", m.twr50.mean},
                          {"twr50_sd", m.twr50.stddev},
                          {"fs_mean", m.forecast_score.mean},
                          {"fs_sd", m.forecast_score.stddev}});
        out << fmt::format("{}: {} episodes, TWR50 {:.3f} +/- {:.3f}, FS {:.3f} +/- {:.3f}\n", m.month, m.episodes,
                           m.twr50.mean, m.twr50.stddev, m.forecast_score.mean, m.forecast_score.stddev);
    }
    write_json_file(od / "eval_report.json", {{"metadata", meta.to_json()}, {"months", months}});
    return kExitOk;
}

// ---------------------------------------------------------------- compare

struct CompareArgs {
    Common common;
    std::string a, b;
    std::size_t samples = 0;
    std::size_t score_samples = 0;
};

int cmd_compare(const CompareArgs& a, std::ostream& out) {
    RunConfig cfg = load_config(a.common);
    if (a.samples > 0) cfg.compare.samples = a.samples;
    if (a.score_samples > 0) cfg.compare.score_samples = a.score_samples;
    cfg.validate();
    if (a.a.empty() != a.b.empty()) throw ConfigError("compare needs both grids or neither");

    std::vector<MonthGridPair> pairs;
    if (!a.a.empty()) {
        pairs.push_back({"pair", std::make_shared<const WindGrid>(read_grid(a.a)),
                         std::make_shared<const WindGrid>(read_grid(a.b))});
    } else {
        if (cfg.months.empty()) throw ConfigError("compare needs two grids or paths.months");
        for (const auto& m : cfg.months) {
            const GridLibrary lib = load_grid_library({m.pairs.front()});
            pairs.push_back({m.month, lib.front().forecast, lib.front().truth});
        }
    }
    const std::uint64_t seed = resolve_seed(a.common, cfg);
    json canon = {{"score", to_json(cfg.score)},
                  {"samples", cfg.compare.samples},
                  {"score_samples", cfg.compare.score_samples}};
    json labels = json::array();
    for (const auto& p : pairs) labels.push_back(p.month);
    canon["months"] = labels;
    const Meta meta{"compare", config_hash(canon), seed};

    std::vector<ModelDiffReport> reports;
    for (std::size_t m = 0; m < pairs.size(); ++m) {
        CompareSpec spec;
        spec.samples = cfg.compare.samples;
        spec.seed = substream_seed(seed, m);
        spec.workers = cfg.workers;
        reports.push_back(compare_models(*pairs[m].forecast, *pairs[m].synthetic, spec, pairs[m].month));
        out << fmt::format("{}: angular difference {:.1f} +/- {:.1f} deg, magnitude difference {:.2f} +/- {:.2f} m/s\n",
                           pairs[m].month, reports.back().angle.mean, reports.back().angle.stddev,
                           reports.back().magnitude.mean, reports.back().magnitude.stddev);
    }
    const auto rows = zero_score_table(pairs, cfg.compare.score_samples, substream_seed(seed, 1000003), cfg.score,
                                       cfg.workers);
    for (const auto& r : rows)
        out << fmt::format("{}: zero scores {:.1f}% forecast-like, {:.1f}% synthetic; mean FS {:.3f} vs {:.3f}\n",
                           r.month, 100.0 * r.forecast_zero_fraction, 100.0 * r.synthetic_zero_fraction,
                           r.forecast_filtered.mean, r.synthetic_filtered.mean);

    const fs::path od(a.common.out);
    fs::create_directories(od);
    {
        auto os = open_out(od / "model_diff.csv");
        os << meta.csv_line();
        write_model_diff_csv(os, reports);
    }
    {
        auto os = open_out(od / "zero_scores.csv");
        os << meta.csv_line();
        write_zero_score_csv(os, rows);
    }
    write_json_file(od / "compare_metadata.json", {{"metadata", meta.to_json()}});
    return kExitOk;
}

// ---------------------------------------------------------------- search

struct SearchArgs {
    Common common;
    std::size_t budget = 1;
    std::int64_t steps = 0;
};

int cmd_search(const SearchArgs& a, std::ostream& out) {
    RunConfig cfg = load_config(a.common);
    if (a.steps > 0) cfg.dqn.total_steps = a.steps;
    cfg.validate();
    if (cfg.training.empty()) throw ConfigError("paths.training lists no grid pairs");
    const GridLibrary lib = load_grid_library(cfg.training);
    TrainerConfig base;
    base.sim = cfg.sim;
    base.reward = cfg.reward;
    base.hp = cfg.dqn;
    base.randomize_arena = cfg.train.randomize_arena;
    const std::uint64_t seed = resolve_seed(a.common, cfg);
    const auto trials = hyperparameter_search(lib, base, cfg.search, a.budget, seed, fs::path(a.common.out));
    for (const auto& t : trials) {
        if (t.ok)
            out << fmt::format("trial {:3}: lr {:.3g}, eps {:.3f} -> {:.3f}, TWR50 {:.3f}\n", t.index,
                               t.hp.learning_rate, t.hp.epsilon_start, t.hp.epsilon_end, t.score);
        else
            out << fmt::format("trial {:3}: failed: {}\n", t.index, t.error);
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"High-altitude balloon station-keeping toolkit", "habsk"};
    app.require_subcommand(1);
    app.set_version_flag("--version", HABSK_VERSION);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Build synthetic wind grids from radiosonde soundings");
    add_common(s, synth.common, "synth_out");
    s->add_option("soundings", synth.soundings, "Directory of sounding CSV files");
    s->add_flag("--csv", synth.csv, "Write CSV payloads instead of float32");

    ScoreArgs score;
    auto* sc = app.add_subcommand("score", "Compute Forecast Scores");
    add_common(sc, score.common, "score_out");
    sc->add_option("grid", score.grid, "Grid header (.json)")->required();
    sc->add_option("--paired", score.paired, "Second grid scored at the same coordinates");
    sc->add_option("--lat", score.lat, "Latitude of a single coordinate");
    sc->add_option("--lon", score.lon, "Longitude of a single coordinate");
    sc->add_option("--start", score.start, "First frame for a single coordinate (UTC)");
    sc->add_option("--random", score.random, "Number of random coordinates");
    sc->add_flag("--keep-zero", score.keep_zero, "Keep zero scores in the reported distribution");
    score.out_opt = sc->get_option("--out");

    TrainArgs train;
    auto* tr = app.add_subcommand("train", "Train a DQN station-keeping policy");
    add_common(tr, train.common, "train_out");
    tr->add_option("--steps", train.steps, "Override total training steps");
    tr->add_option("--stop-after", train.stop_after, "Stop (and checkpoint) once this many steps are done");
    tr->add_option("--resume", train.resume, "Checkpoint directory to continue from");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Evaluate a trained policy over evaluation months");
    add_common(e, ev.common, "eval_out");
    e->add_option("--checkpoint", ev.checkpoint, "Checkpoint directory")->required();
    e->add_option("--episodes", ev.episodes, "Episodes per month");
    e->add_flag("--export-trajectories", ev.export_trajectories, "Write one trajectory CSV per episode");

    CompareArgs cmp;
    auto* c = app.add_subcommand("compare", "Compare forecast-like and synthetic grids");
    add_common(c, cmp.common, "compare_out");
    c->add_option("forecast", cmp.a, "Forecast-like grid header");
    c->add_option("synthetic", cmp.b, "Synthetic grid header");
    c->add_option("--samples", cmp.samples, "Model-difference samples per month");
    c->add_option("--score-samples", cmp.score_samples, "Zero-score samples per month");

    SearchArgs search;
    auto* se = app.add_subcommand("search", "Random hyperparameter search");
    add_common(se, search.common, "search_out");
    se->add_option("--budget", search.budget, "Number of trials")->check(CLI::PositiveNumber);
    se->add_option("--steps", search.steps, "Training steps per trial");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& pe) {
        const int code = app.exit(pe, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (s->parsed()) return cmd_synth(synth, out);
        if (sc->parsed()) return cmd_score(score, out);
        if (tr->parsed()) return cmd_train(train, out);
        if (e->parsed()) return cmd_eval(ev, out);
        if (c->parsed()) return cmd_compare(cmp, out);
        if (se->parsed()) return cmd_search(search, out);
    } catch (const ConfigError& x) {
        err << "config error: " << x.what() << '\n';
        return kExitConfig;
    } catch (const CoverageError& x) {
        err << "coverage error (" << x.axis() << "): " << x.what() << '\n';
        return kExitConfig;
    } catch (const ParseError& x) {
        err << "parse error: " << x.what() << '\n';
        return kExitData;
    } catch (const DataError& x) {
        err << "data error: " << x.what() << '\n';
        return kExitData;
    } catch (const fs::filesystem_error& x) {
        err << "i/o error: " << x.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& x) {
        err << "runtime error: " << x.what() << '\n';
        return kExitRuntime;
    }
    return kExitConfig;
}

}  // namespace habsk
