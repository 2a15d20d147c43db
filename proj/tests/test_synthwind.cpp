#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "habsk/errors.hpp"
#include "habsk/grid_io.hpp"
#include "habsk/sounding.hpp"
#include "habsk/synth.hpp"

using namespace habsk;
using namespace habsk::testing;

namespace {

RadiosondeSounding make_sounding(std::string id, double lat, double lon, std::vector<SoundingSample> samples,
                                 UnixSeconds launch = kT0) {
    RadiosondeSounding s;
    s.station_id = std::move(id);
    s.location = {lat, lon, 1000.0};
    s.launch_time = launch;
    s.samples = std::move(samples);
    return s;
}

/// Constant wind at every 100 m from 14 km to 27 km.
RadiosondeSounding constant_sounding(std::string id, double lat, double lon, double u, double v,
                                     UnixSeconds launch = kT0) {
    std::vector<SoundingSample> s;
    for (double z = 14000.0; z <= 27000.0; z += 100.0) s.push_back({z, u, v});
    return make_sounding(std::move(id), lat, lon, std::move(s), launch);
}

const BoundingBox kBox{33.0, 36.0, -112.0, -108.0};

}  // namespace

TEST_SUITE("synthwind") {

TEST_CASE("sounding parsing follows the meteorological convention") {
    const std::string text =
        "# station_id: 72376\n# latitude: 35.23\n# longitude: -111.82\n# elevation_m: 2179\n"
        "# launch_time: 2023-08-23T12:00:00Z\n"
        "altitude_m,wind_dir_deg,wind_speed_ms\n"
        "16500, 0, 5\n"
        "16000, 270, 10\n"
        "16000, 90, 3\n";
    const RadiosondeSounding s = parse_sounding(text);
    CHECK(s.station_id == "72376");
    CHECK(s.location.latitude == doctest::Approx(35.23));
    CHECK(s.location.altitude == doctest::Approx(2179.0));
    CHECK(s.launch_time == make_utc(2023, 8, 23, 12));
    REQUIRE(s.samples.size() == 2);  // duplicate altitude dropped
    CHECK(s.samples[0].altitude_m == 16000.0);
    CHECK(s.samples[0].u == doctest::Approx(10.0));  // from the west, blowing east
    CHECK(std::abs(s.samples[0].v) < 1e-12);
    CHECK(std::abs(s.samples[1].u) < 1e-12);
    CHECK(s.samples[1].v == doctest::Approx(-5.0));  // from the north, blowing south
}

TEST_CASE("sounding parsing accepts u/v columns and file-name defaults") {
    const std::string text = "# latitude: 35\n# longitude: -106\naltitude_m,u_ms,v_ms\n16000,1.5,-2\n16100,1,1\n";
    SoundingDefaults d;
    d.station_id = "72365";
    d.launch_time = kT0;
    const RadiosondeSounding s = parse_sounding(text, d);
    CHECK(s.station_id == "72365");
    CHECK(s.launch_time == kT0);
    CHECK(s.samples[0].u == 1.5);
    CHECK(s.samples[0].v == -2.0);
}

TEST_CASE("sounding parse errors carry line numbers") {
    const std::string text = "# station_id: 1\n# latitude: 35\n# longitude: -106\n# launch_time: 2023082300\n"
                             "altitude_m,wind_dir_deg,wind_speed_ms\n16000,270,10\n16100,abc,10\n";
    try {
        parse_sounding(text);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 7);
    }
    CHECK_THROWS_AS(parse_sounding(""), EmptyInputError);
    CHECK_THROWS_AS(parse_sounding("   \n"), EmptyInputError);
    CHECK_THROWS_AS(parse_sounding("# latitude: 35\n# longitude: -106\naltitude_m,wind_dir_deg,wind_speed_ms\n"),
                    EmptyInputError);
}

TEST_CASE("default window has 46 bins") {
    const SynthesisConfig cfg;
    CHECK(cfg.level_count() == 46);
    const auto c = cfg.bin_centers();
    CHECK(c.front() == 15000.0);
    CHECK(c.back() == 26250.0);
    SynthesisConfig bad;
    bad.bin_height = 300.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("nearest sample wins the bin") {
    const SynthesisConfig cfg;
    const auto s = make_sounding("A", 35, -110, {{15998.0, 1.0, 0.0}, {16103.0, 2.0, 0.0}});
    const BinnedProfile p = bin_profile(s, cfg);
    const auto bin16 = static_cast<std::size_t>((16000.0 - cfg.altitude_floor) / cfg.bin_height);
    CHECK(p.bin_centers[bin16] == 16000.0);
    CHECK(p.u[bin16] == 1.0);
    CHECK(p.fill[bin16] == BinFill::Observed);
    // 16103 sits in the 16000 bin, so the 16250 bin has no sample of its own
    CHECK(p.fill[bin16 + 1] == BinFill::Interpolated);
}

TEST_CASE("empty bins are linearly filled and held past the ends") {
    const SynthesisConfig cfg;
    const auto s = make_sounding("A", 35, -110, {{16000.0, 0.0, 0.0}, {16500.0, 10.0, -4.0}});
    const BinnedProfile p = bin_profile(s, cfg);
    const auto i = static_cast<std::size_t>((16250.0 - cfg.altitude_floor) / cfg.bin_height);
    CHECK(p.u[i] == doctest::Approx(5.0));
    CHECK(p.v[i] == doctest::Approx(-2.0));
    CHECK(p.u.front() == 0.0);  // constant extension below
    CHECK(p.u.back() == 10.0);  // and above
}

TEST_CASE("fill mask matches a brute-force nearest-sample check") {
    const SynthesisConfig cfg;
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<SoundingSample> samples;
        double z = rng.uniform(15500.0, 17000.0);
        const double top = rng.uniform(20000.0, 24000.0);
        while (z < top) {
            samples.push_back({std::round(z), rng.uniform(-10, 10), rng.uniform(-10, 10)});
            z += rng.uniform(50.0, 700.0);
        }
        const BinnedProfile p = bin_profile(make_sounding("R", 35, -110, samples), cfg);
        const auto centers = cfg.bin_centers();
        for (std::size_t b = 0; b < centers.size(); ++b) {
            const double lo = centers[b] - cfg.bin_height / 2, hi = centers[b] + cfg.bin_height / 2;
            const SoundingSample* best = nullptr;
            for (const auto& s : samples)
                if (s.altitude_m >= lo && s.altitude_m < hi &&
                    (!best || std::abs(s.altitude_m - centers[b]) < std::abs(best->altitude_m - centers[b])))
                    best = &s;
            if (best) {
                CHECK(p.fill[b] == BinFill::Observed);
                CHECK(p.u[b] == best->u);  // observed bins carry a raw value exactly
                CHECK(p.v[b] == best->v);
            } else {
                CHECK(p.fill[b] == BinFill::Interpolated);
            }
        }
    }
}

TEST_CASE("soundings without window coverage are rejected by name") {
    const SynthesisConfig cfg;
    const auto s = make_sounding("72999", 35, -110, {{5000.0, 1.0, 0.0}, {16000.0, 2.0, 0.0}});
    try {
        bin_profile(s, cfg);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("72999") != std::string::npos);
    }
}

TEST_CASE("rasterization is nearest-neighbour") {
    const SynthesisConfig cfg;
    const std::vector<BinnedProfile> one{bin_profile(constant_sounding("A", 34, -110, 3, 4), cfg)};
    const WindPlane single = rasterize_level(one, 0, cfg, kBox);
    for (double x : single.u.values) CHECK(x == 3.0);
    for (double x : single.v.values) CHECK(x == 4.0);

    // two stations on the same row, cell just east of the midpoint belongs to B
    std::vector<BinnedProfile> two{bin_profile(constant_sounding("A", 34, -111, 1, 0), cfg),
                                   bin_profile(constant_sounding("B", 34, -109, 2, 0), cfg)};
    const std::vector<double> lats{34.0}, lons{-110.01, -109.99};
    const WindPlane mid = rasterize_level(two, 0, lats, lons);
    CHECK(mid.u.at(0, 0) == 1.0);
    CHECK(mid.u.at(0, 1) == 2.0);
    // exact midpoint ties to the lower station index
    const std::vector<double> centre{-110.0};
    CHECK(rasterize_level(two, 0, lats, centre).u.at(0, 0) == 1.0);
    CHECK_THROWS_AS(rasterize_level(std::vector<BinnedProfile>{}, 0, lats, lons), EmptyInputError);
}

TEST_CASE("station order only matters through the tie-break") {
    const SynthesisConfig cfg;
    std::vector<BinnedProfile> p{bin_profile(constant_sounding("A", 33.3, -111.7, 1, 0), cfg),
                                 bin_profile(constant_sounding("B", 35.6, -108.4, 2, 0), cfg),
                                 bin_profile(constant_sounding("C", 34.1, -110.2, 3, 0), cfg)};
    std::vector<BinnedProfile> q{p[2], p[0], p[1]};
    const WindPlane a = rasterize_level(p, 0, cfg, kBox);
    const WindPlane b = rasterize_level(q, 0, cfg, kBox);
    CHECK(a.u.values == b.u.values);
}

TEST_CASE("smoothing") {
    Plane flat(20, 30, 7.25);
    CHECK(smooth_level(flat, 0.0).values == flat.values);
    for (double sigma : {0.5, 1.0, 2.0, 5.0}) {
        const Plane s = smooth_level(flat, sigma);
        for (double x : s.values) CHECK(x == doctest::Approx(7.25).epsilon(1e-12));
    }

    Plane impulse(41, 41, 0.0);
    impulse.at(20, 20) = 1.0;
    const double sigma = 2.0;
    const Plane s = smooth_level(impulse, sigma);
    const double expected = 1.0 / (2.0 * std::numbers::pi * sigma * sigma);
    CHECK(std::abs(s.at(20, 20) - expected) / expected <= 1e-3);
    double total = 0.0;
    for (double x : s.values) total += x;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

    Rng rng(2);
    Plane noisy(15, 15);
    for (auto& x : noisy.values) x = rng.uniform(-3, 8);
    const Plane sm = smooth_level(noisy, 1.5);
    const auto [lo, hi] = std::minmax_element(noisy.values.begin(), noisy.values.end());
    for (double x : sm.values) {
        CHECK(x >= *lo - 1e-12);
        CHECK(x <= *hi + 1e-12);
    }
}

TEST_CASE("synthesize a constant field") {
    const SynthesisConfig cfg;
    const std::vector<RadiosondeSounding> s{constant_sounding("A", 34.5, -110, 3, 4)};
    const WindGrid g = synthesize_launch(s, cfg, kBox);
    CHECK(g.kind() == GridKind::Synthetic);
    CHECK(g.levels().size() == 46);
    for (double x : g.u()) CHECK(x == doctest::Approx(3.0));
    for (double x : g.v()) CHECK(x == doctest::Approx(4.0));
}

TEST_CASE("unsmoothed grid equals the binned value at a station") {
    SynthesisConfig cfg;
    cfg.smoothing_sigma = 0.0;
    Rng rng(31);
    std::vector<RadiosondeSounding> s;
    const std::vector<std::pair<double, double>> sites{{33.5, -111.5}, {35.5, -109.0}, {34.25, -110.25}};
    for (std::size_t n = 0; n < sites.size(); ++n) {
        std::vector<SoundingSample> samples;
        for (double z = 14900.0; z < 26600.0; z += rng.uniform(80, 300))
            samples.push_back({z, rng.uniform(-15, 15), rng.uniform(-15, 15)});
        s.push_back(make_sounding("S" + std::to_string(n), sites[n].first, sites[n].second, samples));
    }
    const WindGrid g = synthesize_launch(s, cfg, kBox);
    for (std::size_t n = 0; n < s.size(); ++n) {
        const BinnedProfile p = bin_profile(s[n], cfg);
        const auto& lat = g.latitudes();
        const auto& lon = g.longitudes();
        const auto i = static_cast<std::size_t>(std::find(lat.begin(), lat.end(), sites[n].first) - lat.begin());
        const auto j = static_cast<std::size_t>(std::find(lon.begin(), lon.end(), sites[n].second) - lon.begin());
        REQUIRE(i < lat.size());
        REQUIRE(j < lon.size());
        for (std::size_t k = 0; k < g.levels().size(); ++k) {
            CHECK(g.wind_at(0, k, i, j).u == p.u[k]);
            CHECK(g.wind_at(0, k, i, j).v == p.v[k]);
        }
    }
}

TEST_CASE("synthesized values stay within the raw sample range") {
    const SynthesisConfig cfg;
    Rng rng(8);
    std::vector<RadiosondeSounding> s;
    for (int n = 0; n < 4; ++n) {
        std::vector<SoundingSample> samples;
        for (double z = 14800.0; z < 26700.0; z += rng.uniform(60, 400))
            samples.push_back({z, rng.uniform(-20, 20), rng.uniform(-20, 20)});
        s.push_back(make_sounding("S" + std::to_string(n), rng.uniform(33, 36), rng.uniform(-112, -108), samples));
    }
    const WindGrid g = synthesize_launch(s, cfg, kBox);
    for (std::size_t k = 0; k < g.levels().size(); ++k) {
        double lo = 1e9, hi = -1e9;
        for (const auto& snd : s) {
            const BinnedProfile p = bin_profile(snd, cfg);
            lo = std::min(lo, p.u[k]);
            hi = std::max(hi, p.u[k]);
        }
        for (std::size_t i = 0; i < g.latitudes().size(); ++i)
            for (std::size_t j = 0; j < g.longitudes().size(); ++j) {
                CHECK(g.wind_at(0, k, i, j).u >= lo - 1e-9);
                CHECK(g.wind_at(0, k, i, j).u <= hi + 1e-9);
            }
    }
}

TEST_CASE("launch times without valid soundings are dropped with a warning") {
    const SynthesisConfig cfg;
    std::vector<RadiosondeSounding> s{constant_sounding("A", 34, -110, 1, 1, kT0),
                                      make_sounding("A", 34, -110, {{3000, 1, 1}, {4000, 1, 1}}, kT0 + 12 * 3600),
                                      constant_sounding("A", 34, -110, 2, 2, kT0 + 24 * 3600)};
    const SynthesisResult r = synthesize_forecast(s, cfg, kBox);
    CHECK(r.grid.times().size() == 2);
    CHECK_FALSE(r.warnings.empty());
    const std::vector<RadiosondeSounding> none;
    CHECK_THROWS_AS(synthesize_forecast(none, cfg, kBox), EmptyInputError);
}

TEST_CASE("temporal densification") {
    const SynthesisConfig cfg;
    std::vector<RadiosondeSounding> s{constant_sounding("A", 34, -110, 0, 2, kT0),
                                      constant_sounding("A", 34, -110, 8, -2, kT0 + 12 * 3600)};
    const WindGrid g = synthesize_forecast(s, cfg, kBox).grid;
    const WindGrid d = densify_time(g, 3.0);
    REQUIRE(d.times().size() == 5);
    CHECK(d.times()[1] - d.times()[0] == 3 * 3600);
    CHECK(d.wind_at(2, 5, 3, 3).u == doctest::Approx(4.0));
    CHECK(d.wind_at(2, 5, 3, 3).v == doctest::Approx(0.0));
    // native frames copied unchanged
    const std::size_t per = g.u().size() / 2;
    for (std::size_t i = 0; i < per; ++i) {
        CHECK(d.u()[i] == g.u()[i]);
        CHECK(d.u()[4 * per + i] == g.u()[per + i]);
    }
    CHECK_THROWS_AS(densify_time(g, 5.0), ConfigError);
}

TEST_CASE("synthetic grids resolve more levels than the forecast-like grid") {
    const WindGrid f = read_grid(std::filesystem::path(HABSK_SAMPLE_DIR) / "forecast_like_20230823.json");
    CHECK(SynthesisConfig{}.level_count() >= 4 * f.levels().size());
}

}  // TEST_SUITE
