#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fixtures.hpp"
#include "habsk/cli.hpp"
#include "habsk/errors.hpp"
#include "habsk/grid_io.hpp"
#include "habsk/run_config.hpp"

using namespace habsk;
using namespace habsk::testing;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = -1;
    std::string out, err;
};

CliRun cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream os(p, std::ios::binary);
    os << s;
}

/// Writes `grid` under dir and a config naming it as truth and forecast
/// for both training and one evaluation month.
fs::path fixture_config(const fs::path& dir, const WindGrid& grid, nlohmann::json extra = nlohmann::json::object()) {
    write_grid(grid, dir / "grid.json");
    nlohmann::json pair = {{"name", "fixture"}, {"truth", "grid.json"}, {"forecast", "grid.json"}};
    nlohmann::json cfg = {
        {"seed", 3},
        {"sim", {{"arena", {{"center", {{"latitude", 35.0}, {"longitude", -103.0}}}}}}},
        {"dqn",
         {{"total_steps", 1200}, {"warmup_steps", 200}, {"eval_interval", 600}, {"eval_episodes", 2},
          {"hidden_layers", {16, 16}}, {"replay_capacity", 5000}}},
        {"eval", {{"episodes_per_month", 4}}},
        {"compare", {{"samples", 50}, {"score_samples", 50}}},
        {"paths", {{"training", {pair}}, {"months", {{{"month", "2023-08"}, {"pairs", {pair}}}}}}}};
    cfg.merge_patch(extra);
    write_text(dir / "config.json", cfg.dump(2));
    return dir / "config.json";
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("run config parsing is strict") {
    const auto j = nlohmann::json::parse(R"({"seed": 4, "sim": {"step_dt": 30}, "dqn": {"learning_rate": 1e-4}})");
    const RunConfig c = parse_run_config(j, "/base");
    CHECK(c.seed == 4u);
    CHECK(c.sim.step_dt == 30.0);
    CHECK(c.dqn.learning_rate == 1e-4);
    CHECK(c.dqn.batch_size == DQNHyperparams{}.batch_size);

    try {
        parse_run_config(nlohmann::json::parse(R"({"dqn": {"learning_rat": 1e-4}})"), "");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("dqn.learning_rat") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_run_config(nlohmann::json::parse(R"({"colour": 1})"), ""), ConfigError);
    CHECK_THROWS_AS(parse_run_config(nlohmann::json::parse(R"({"sim": {"step_dt": "fast"}})"), ""), ConfigError);
    CHECK_THROWS_AS(parse_run_config(nlohmann::json::parse(R"({"score": {"calm_policy": "maybe"}})"), ""),
                    ConfigError);

    const auto paths = nlohmann::json::parse(
        R"({"paths": {"training": [{"name": "x", "truth": "t.json", "forecast": "/abs/f.json"}]}})");
    const RunConfig p = parse_run_config(paths, "/base/dir");
    CHECK(p.training[0].truth == fs::path("/base/dir/t.json"));
    CHECK(p.training[0].forecast == fs::path("/abs/f.json"));

    RunConfig bad;
    bad.dqn.learning_rate = 2.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("config round trip through json") {
    RunConfig c;
    c.sim.episode_hours = 10.0;
    c.reward.variant = RewardVariant::Loon;
    c.score.calm_policy = CalmPolicy::Include;
    c.dqn.hidden_layers = {64};
    const RunConfig back = parse_run_config(to_json(c), "");
    CHECK(back.sim.episode_hours == 10.0);
    CHECK(back.reward.variant == RewardVariant::Loon);
    CHECK(back.score.calm_policy == CalmPolicy::Include);
    CHECK(back.dqn.hidden_layers == std::vector<std::size_t>{64});
    CHECK(config_hash(to_json(c)) == config_hash(to_json(back)));
    CHECK(config_hash(to_json(c)).size() == 16);
}

TEST_CASE("usage errors") {
    CHECK(cli({}).code == kExitConfig);
    CHECK(cli({"fly"}).code == kExitConfig);
    CHECK(cli({"score"}).code == kExitConfig);
    CHECK(cli({"--help"}).code == kExitOk);
    CHECK(cli({"--version"}).code == kExitOk);
}

TEST_CASE("synth exit codes") {
    TempDir dir("cli_synth");
    fs::create_directories(dir / "empty");
    const CliRun empty = cli({"synth", (dir / "empty").string(), "-o", (dir / "o").string()});
    CHECK(empty.code != 0);
    CHECK(empty.err.find("no soundings") != std::string::npos);

    fs::create_directories(dir / "bad");
    write_text(dir / "bad" / "72376_2023082300.csv",
               "# latitude: 35\n# longitude: -111\naltitude_m,wind_dir_deg,wind_speed_ms\n16000,x,3\n");
    const CliRun parse = cli({"synth", (dir / "bad").string(), "-o", (dir / "o").string()});
    CHECK(parse.code == kExitData);
    CHECK(parse.err.find("72376_2023082300.csv") != std::string::npos);

    write_text(dir / "unknown.json", R"({"synth": {"bin_hieght": 100}})");
    CHECK(cli({"synth", (dir / "bad").string(), "-c", (dir / "unknown.json").string()}).code == kExitConfig);
}

TEST_CASE("synth on the bundled sample day") {
    TempDir dir("cli_sample");
    const std::string snd = std::string(HABSK_SAMPLE_DIR) + "/soundings";
    const CliRun a = cli({"synth", snd, "-o", (dir / "a").string()});
    REQUIRE(a.code == 0);
    const CliRun b = cli({"synth", snd, "-o", (dir / "b").string()});
    REQUIRE(b.code == 0);
    const WindGrid g = read_grid(dir / "a" / "synthetic_series.json");
    CHECK(g.levels().size() == 46);
    CHECK(g.times().size() == 9);  // 00Z, 12Z, 00Z densified to 3 h
    CHECK(fs::exists(dir / "a" / "synthetic_2023082312.json"));
    for (const auto& e : fs::directory_iterator(dir / "a"))
        CHECK(slurp(e.path()) == slurp(dir / "b" / e.path().filename()));
    CHECK(a.out.find("46 levels") != std::string::npos);
    CHECK(a.out.find("72376") != std::string::npos);
}

TEST_CASE("score command") {
    TempDir dir("cli_score");
    write_grid(uniform_wind_grid(5.0, 0.0), dir / "uniform.json");
    write_grid(altitude_profile_grid([](double z) {
                   const auto k = static_cast<long>(std::lround((z - 15000.0) / 1000.0));
                   return WindVector{k % 2 == 0 ? 5.0 : -5.0, 0.0};
               }),
               dir / "opposing.json");

    const CliRun u = cli({"score", (dir / "uniform.json").string(), "--lat", "35", "--lon", "-100"});
    REQUIRE(u.code == 0);
    CHECK(nlohmann::json::parse(u.out)["primary"]["value"] == 0.0);
    const CliRun o = cli({"score", (dir / "opposing.json").string(), "--lat", "35", "--lon", "-100"});
    REQUIRE(o.code == 0);
    CHECK(nlohmann::json::parse(o.out)["primary"]["value"] == 1.0);

    const std::string grid = (dir / "opposing.json").string();
    REQUIRE(cli({"score", grid, "--random", "1000", "--seed", "7", "-o", (dir / "r1").string()}).code == 0);
    REQUIRE(cli({"score", grid, "--random", "1000", "--seed", "7", "-o", (dir / "r2").string()}).code == 0);
    CHECK(slurp(dir / "r1" / "score_samples.csv") == slurp(dir / "r2" / "score_samples.csv"));
    CHECK(slurp(dir / "r1" / "score_summary.json") == slurp(dir / "r2" / "score_summary.json"));
    CHECK(count_lines(slurp(dir / "r1" / "score_samples.csv")) == 1002);

    CHECK(cli({"score", grid}).code == kExitConfig);
    CHECK(cli({"score", grid, "--lat", "35"}).code == kExitConfig);
    CHECK(cli({"score", (dir / "missing.json").string(), "--random", "3"}).code == kExitData);
    CHECK(cli({"score", grid, "--lat", "80", "--lon", "-100"}).code == kExitData);  // outside the grid

    // seed omitted: one is drawn and recorded
    const CliRun drawn = cli({"score", grid, "--random", "5"});
    REQUIRE(drawn.code == 0);
    CHECK(nlohmann::json::parse(drawn.out)["metadata"].contains("seed"));
}

TEST_CASE("train validates before computing") {
    TempDir dir("cli_train_bad");
    const fs::path cfg = fixture_config(dir.path(), uniform_wind_grid(0, 0), {{"dqn", {{"learning_rate", 5.0}}}});
    const CliRun r = cli({"train", "-c", cfg.string(), "-o", (dir / "out").string()});
    CHECK(r.code == kExitConfig);
    CHECK_FALSE(fs::exists(dir / "out"));

    const fs::path nogrid = dir / "nogrid.json";
    write_text(nogrid, R"({"paths": {"training": [{"truth": "none.json", "forecast": "none.json"}]}})");
    CHECK(cli({"train", "-c", nogrid.string(), "-o", (dir / "o2").string()}).code == kExitData);
}

TEST_CASE("train, resume and eval") {
    TempDir dir("cli_train");
    const fs::path cfg = fixture_config(dir.path(), uniform_wind_grid(0.0, 0.0));
    const std::string c = cfg.string();

    const CliRun t = cli({"train", "-c", c, "-o", (dir / "full").string()});
    REQUIRE(t.code == 0);
    CHECK(fs::exists(dir / "full" / "checkpoint" / "manifest.json"));
    CHECK(fs::exists(dir / "full" / "checkpoint" / "weights.bin"));
    const std::string curve = slurp(dir / "full" / "learning_curve.csv");
    CHECK(curve.rfind("# tool=habsk", 0) == 0);
    CHECK(count_lines(curve) == 2 + 2);  // metadata, header, steps 600 and 1200

    REQUIRE(cli({"train", "-c", c, "--stop-after", "500", "-o", (dir / "half").string()}).code == 0);
    REQUIRE(cli({"train", "-c", c, "--resume", (dir / "half" / "checkpoint").string(), "-o",
                 (dir / "rest").string()})
                .code == 0);
    CHECK(slurp(dir / "rest" / "checkpoint" / "weights.bin") == slurp(dir / "full" / "checkpoint" / "weights.bin"));
    CHECK(slurp(dir / "rest" / "learning_curve.csv") == curve);
    CHECK(cli({"train", "-c", c, "--seed", "4", "--resume", (dir / "half" / "checkpoint").string(), "-o",
               (dir / "x").string()})
              .code == kExitConfig);

    const std::string ck = (dir / "full" / "checkpoint").string();
    const CliRun e = cli({"eval", "-c", c, "--checkpoint", ck, "--export-trajectories", "-o", (dir / "ev").string()});
    REQUIRE(e.code == 0);
    const auto report = nlohmann::json::parse(slurp(dir / "ev" / "eval_report.json"));
    CHECK(report["months"][0]["twr50_mean"] == 1.0);
    CHECK(report["months"][0]["episodes"] == 4);
    CHECK(fs::exists(dir / "ev" / "trajectories" / "2023-08_00000.csv"));
    CHECK(fs::exists(dir / "ev" / "trajectories" / "2023-08_00003.csv"));
    CHECK(count_lines(slurp(dir / "ev" / "records.csv")) == 2 + 4);

    // heatmap: metadata + header + one row per TWR bin, one column per FS bin
    const std::string heat = slurp(dir / "ev" / "heatmap_2023-08.csv");
    CHECK(count_lines(heat) == 2 + 10);
    std::istringstream in(heat);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    CHECK(std::count(line.begin(), line.end(), ',') == 10);

    CHECK(cli({"eval", "-c", c, "--checkpoint", (dir / "nowhere").string(), "-o", (dir / "ev2").string()}).code !=
          0);
}

TEST_CASE("compare command") {
    TempDir dir("cli_compare");
    const WindGrid g = opposing_layers_grid();
    write_grid(g, dir / "a.json");
    const CliRun r = cli({"compare", (dir / "a.json").string(), (dir / "a.json").string(), "--samples", "40",
                          "--score-samples", "40", "--seed", "1", "-o", (dir / "o").string()});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "o" / "model_diff.csv"));
    CHECK(fs::exists(dir / "o" / "zero_scores.csv"));

    auto ax = make_axes(50, 51, 10, 11, 1.0, altitude_levels(15000, 16000, 1000), {kT0, kT0 + 3600});
    write_grid(WindGrid::filled(ax, GridKind::ForecastLike, [](auto...) { return WindVector{1, 1}; }),
               dir / "far.json");
    const CliRun far = cli({"compare", (dir / "a.json").string(), (dir / "far.json").string(), "--seed", "1", "-o",
                            (dir / "o2").string()});
    CHECK(far.code == kExitConfig);  // coverage problems share the config exit code
    CHECK(far.err.find("coverage") != std::string::npos);
}

TEST_CASE("search command") {
    TempDir dir("cli_search");
    const fs::path cfg = fixture_config(dir.path(), opposing_layers_grid());
    const CliRun r = cli({"search", "-c", cfg.string(), "--budget", "2", "--steps", "400", "-o",
                          (dir / "s").string()});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "s" / "ranking.json"));
    CHECK(fs::exists(dir / "s" / "trial_001.json"));
}

}  // TEST_SUITE
