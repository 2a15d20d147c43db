#include <doctest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "habsk/errors.hpp"
#include "habsk/forecast_score.hpp"
#include "oracles.hpp"

using namespace habsk;
using namespace habsk::testing;

namespace {

std::vector<WindVector> bearings(std::initializer_list<double> list, double speed = 5.0) {
    std::vector<WindVector> out;
    for (double b : list) out.push_back(WindVector::from_bearing(b, speed));
    return out;
}

std::vector<WindVector> rotate(const std::vector<WindVector>& col, double deg) {
    std::vector<WindVector> out;
    for (const auto& w : col) out.push_back(WindVector::from_bearing(w.bearing() + deg, w.magnitude()));
    return out;
}

std::vector<WindVector> random_column(Rng& rng, std::size_t n) {
    std::vector<WindVector> col;
    for (std::size_t i = 0; i < n; ++i) col.push_back({rng.uniform(-15, 15), rng.uniform(-15, 15)});
    return col;
}

oracle::Column to_oracle(const std::vector<WindVector>& col) {
    oracle::Column c;
    for (const auto& w : col) {
        c.u.push_back(w.u);
        c.v.push_back(w.v);
    }
    return c;
}

/// Eastward on even levels, westward on odd levels.
WindGrid alternating_grid() {
    return altitude_profile_grid([](double z) {
        const auto k = static_cast<long>(std::lround((z - 15000.0) / 1000.0));
        return WindVector{k % 2 == 0 ? 6.0 : -6.0, 0.0};
    });
}

}  // namespace

TEST_SUITE("forecast_score") {

TEST_CASE("bin edges") {
    const ScoreConfig cfg;
    CHECK(bin_direction(0.0, cfg) == 1);
    CHECK(bin_direction(180.0, cfg) == 5);
    CHECK(bin_direction(22.5, cfg) == 2);
    CHECK(bin_direction(337.5, cfg) == 1);
    CHECK(bin_direction(337.4999, cfg) == 8);
    CHECK(bin_direction(359.999, cfg) == 1);
    Rng rng(1);
    for (int i = 0; i < 2000; ++i) {
        const double b = rng.uniform(0, 360);
        CHECK(bin_direction(b, cfg) == oracle::scan_bin(b, 8, 22.5));
    }
}

TEST_CASE("worked examples") {
    const ScoreConfig cfg;
    const auto same = bearings({90, 90, 90, 90, 90, 90, 90});
    CHECK(opposing_score(same, cfg).t_norm == 0.0);
    const auto pair = bearings({0, 180});
    const OpposingScore s = opposing_score(pair, cfg);
    CHECK(s.t_norm == 1.0);
    CHECK(s.pair_count == 1);
    // three east, one west: one pair out of floor(4/2)
    CHECK(opposing_score(bearings({90, 90, 90, 270}), cfg).t_norm == 0.5);
    CHECK_THROWS_AS(opposing_score(std::vector<WindVector>{}, cfg), EmptyInputError);
}

TEST_CASE("calm levels") {
    ScoreConfig cfg;
    std::vector<WindVector> col = bearings({0, 180});
    col.push_back(WindVector::from_bearing(90, 1.0));  // below the 2 m/s threshold
    const OpposingScore excl = opposing_score(col, cfg);
    CHECK(excl.histogram.levels_counted == 2);
    CHECK(excl.t_norm == 1.0);
    cfg.calm_policy = CalmPolicy::Include;
    const OpposingScore incl = opposing_score(col, cfg);
    CHECK(incl.histogram.levels_counted == 3);
    CHECK(incl.t_norm == 1.0);  // floor(3/2) = 1
}

TEST_CASE("random short columns match the exhaustive matching oracle") {
    const ScoreConfig cfg;
    Rng rng(2024);
    for (int n = 0; n < 500; ++n) {
        const auto col = random_column(rng, 7);
        const double expected = oracle::t_norm(to_oracle(col), 8, 22.5, cfg.calm_threshold, true);
        CHECK(opposing_score(col, cfg).t_norm == expected);
    }
}

TEST_CASE("other bin counts match the oracle") {
    Rng rng(99);
    for (int nb : {4, 6, 12, 16}) {
        ScoreConfig cfg;
        cfg.num_bins = nb;
        cfg.center_offset_deg = 180.0 / nb;
        for (int n = 0; n < 100; ++n) {
            const auto col = random_column(rng, 9);
            CHECK(opposing_score(col, cfg).t_norm ==
                  oracle::t_norm(to_oracle(col), nb, cfg.center_offset_deg, cfg.calm_threshold, true));
        }
    }
}

TEST_CASE("histogram invariants") {
    const ScoreConfig cfg;
    Rng rng(4);
    for (int n = 0; n < 200; ++n) {
        const auto col = random_column(rng, static_cast<std::size_t>(rng.integer(1, 46)));
        const OpposingScore s = opposing_score(col, cfg);
        int total = 0;
        for (int c : s.histogram.counts) total += c;
        CHECK(total == s.histogram.levels_counted);
        CHECK(s.t_norm >= 0.0);
        CHECK(s.t_norm <= 1.0);
    }
}

TEST_CASE("rotation covariance") {
    const ScoreConfig cfg;
    Rng rng(6);
    for (int n = 0; n < 300; ++n) {
        // keep bearings away from bin edges so rotation rounding cannot move them
        std::vector<WindVector> col;
        const auto levels = static_cast<std::size_t>(rng.integer(2, 20));
        for (std::size_t i = 0; i < levels; ++i)
            col.push_back(WindVector::from_bearing(45.0 * static_cast<double>(rng.integer(0, 7)) + rng.uniform(-20, 20),
                                                   rng.uniform(3, 20)));
        const double t = opposing_score(col, cfg).t_norm;
        CHECK(opposing_score(rotate(col, 45.0), cfg).t_norm == t);
        CHECK(opposing_score(rotate(col, 180.0), cfg).t_norm == t);
    }
}

TEST_CASE("adding an opposing level never lowers the pair count") {
    const ScoreConfig cfg;
    Rng rng(7);
    for (int n = 0; n < 300; ++n) {
        auto col = random_column(rng, static_cast<std::size_t>(rng.integer(1, 12)));
        const OpposingScore before = opposing_score(col, cfg);
        // find the bin with the largest surplus over its opposite and oppose it
        int best = 0, surplus = -1;
        for (int i = 0; i < 8; ++i) {
            const int d = before.histogram.counts[i] - before.histogram.counts[(i + 4) % 8];
            if (d > surplus) {
                surplus = d;
                best = i;
            }
        }
        const double centre = 45.0 * ((best + 4) % 8);
        col.push_back(WindVector::from_bearing(centre, 10.0));
        CHECK(opposing_score(col, cfg).pair_count >= before.pair_count);
    }
}

TEST_CASE("forecast score over a grid") {
    const ScoreConfig cfg;
    const WindGrid uniform = uniform_wind_grid(4.0, 3.0);
    const std::vector<UnixSeconds> times{kT0, kT0 + 3600, kT0 + 7200};
    CHECK(forecast_score(uniform, {35, -105}, times, cfg).value == 0.0);

    const WindGrid alt = alternating_grid();
    const ForecastScore fs = forecast_score(alt, {35, -105}, times, cfg);
    CHECK(fs.value == 1.0);
    CHECK(fs.per_timestamp.size() == 3);
    CHECK(fs.histograms.size() == 3);
    CHECK(fs.source_kind == GridKind::Synthetic);

    // single timestamp equals that timestamp's T_norm
    const std::vector<UnixSeconds> one{kT0 + 1800};
    const ForecastScore single = forecast_score(alt, {35, -105}, one, cfg);
    CHECK(single.value == single.per_timestamp.front());

    ScoreConfig window = cfg;
    window.altitude_min = 30000.0;
    window.altitude_max = 40000.0;
    CHECK_THROWS_AS(forecast_score(alt, {35, -105}, times, window), ConfigError);
}

TEST_CASE("score is the mean over timestamps") {
    // first frame opposing, second frame uniform
    auto ax = make_axes(30, 31, -100, -99, 1.0, altitude_levels(15000, 16000, 1000), {kT0, kT0 + 3600});
    const WindGrid g = WindGrid::filled(ax, GridKind::Synthetic, [](std::size_t t, std::size_t k, auto...) {
        if (t == 1) return WindVector{5.0, 0.0};
        return WindVector{k == 0 ? 5.0 : -5.0, 0.0};
    });
    const std::vector<UnixSeconds> times{kT0, kT0 + 3600};
    CHECK(forecast_score(g, {30.5, -99.5}, times, {}).value == 0.5);
}

TEST_CASE("score distribution") {
    const ScoreConfig cfg;
    const WindGrid uniform = uniform_wind_grid(4.0, 3.0);
    const DistributionResult u = score_distribution(uniform, 50, 1, cfg, true);
    CHECK(u.primary.zero_fraction == 1.0);
    CHECK(u.primary.scores.empty());

    const WindGrid alt = alternating_grid();
    const DistributionResult a = score_distribution(alt, 200, 7, cfg, false, &uniform, 1);
    const DistributionResult b = score_distribution(alt, 200, 7, cfg, false, &uniform, 3);
    CHECK(a.primary.mean == b.primary.mean);
    CHECK(a.primary.stddev == b.primary.stddev);
    REQUIRE(a.paired.has_value());
    CHECK(a.paired->zero_fraction == 1.0);
    CHECK(a.primary.mean >= a.paired->mean);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].coordinate == b.samples[i].coordinate);
        CHECK(a.samples[i].times == b.samples[i].times);
        CHECK(a.samples[i].times.size() == 2);  // only two frames in the fixture
    }
}

TEST_CASE("paired grids must overlap") {
    const WindGrid a = uniform_wind_grid(1, 1);
    auto ax = make_axes(50, 51, 10, 11, 1.0, altitude_levels(15000, 16000, 1000), {kT0, kT0 + 3600});
    const WindGrid far = WindGrid::filled(ax, GridKind::ForecastLike, [](auto...) { return WindVector{1, 1}; });
    CHECK_THROWS_AS(score_distribution(a, 10, 1, {}, false, &far), CoverageError);
}

TEST_CASE("score config validation") {
    ScoreConfig c;
    c.num_bins = 5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.center_offset_deg = 90.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.timestamps = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("frames in window") {
    const WindGrid g = uniform_wind_grid(1, 1, 6);  // frames at 0 h and 6 h
    CHECK(frames_in_window(g, kT0, kT0 + 6 * 3600).size() == 2);
    const auto none = frames_in_window(g, kT0 + 3600, kT0 + 7200);
    REQUIRE(none.size() == 1);
}

}  // TEST_SUITE
