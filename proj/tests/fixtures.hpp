#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <functional>
#include <memory>
#include <vector>

#include <unistd.h>

#include "habsk/dqn.hpp"
#include "habsk/wind_grid.hpp"

namespace habsk::testing {

inline constexpr UnixSeconds kT0 = 1690848000;  // 2023-08-01T00:00:00Z

inline std::vector<Level> altitude_levels(double lo, double hi, double step) {
    std::vector<Level> out;
    for (double z = lo; z <= hi + 1e-9; z += step) out.push_back({z, std::nullopt});
    return out;
}

inline GridAxes make_axes(double lat_lo, double lat_hi, double lon_lo, double lon_hi, double res,
                          std::vector<Level> levels, std::vector<UnixSeconds> times) {
    GridAxes ax;
    ax.latitudes = linspace_step(lat_lo, lat_hi, res);
    ax.longitudes = linspace_step(lon_lo, lon_hi, res);
    ax.levels = std::move(levels);
    ax.times = std::move(times);
    return ax;
}

inline std::vector<UnixSeconds> hourly(int hours, int step = 1) {
    std::vector<UnixSeconds> t;
    for (int h = 0; h <= hours; h += step) t.push_back(kT0 + 3600LL * h);
    return t;
}

/// Wind depending on altitude only, on a 15-25 km column.
inline WindGrid altitude_profile_grid(const std::function<WindVector(double)>& profile, double level_step = 1000.0,
                                      int hours = 48, GridKind kind = GridKind::Synthetic) {
    auto ax = make_axes(30.0, 40.0, -110.0, -96.0, 1.0, altitude_levels(15000.0, 25000.0, level_step),
                        {kT0, kT0 + 3600LL * hours});
    return WindGrid::filled(ax, kind, [&](std::size_t, std::size_t k, std::size_t, std::size_t) {
        return profile(ax.levels[k].altitude_m);
    });
}

inline WindGrid uniform_wind_grid(double u, double v, int hours = 48) {
    return altitude_profile_grid([=](double) { return WindVector{u, v}; }, 1000.0, hours);
}

/// Eastward 5 m/s at and below 16 km, westward 5 m/s at and above 20 km,
/// linear shear in between.
inline WindGrid opposing_layers_grid() {
    return altitude_profile_grid([](double z) {
        if (z <= 16000.0) return WindVector{5.0, 0.0};
        if (z >= 20000.0) return WindVector{-5.0, 0.0};
        return WindVector{5.0 - 10.0 * (z - 16000.0) / 4000.0, 0.0};
    });
}

inline GridLibrary library_of(WindGrid truth) {
    auto g = std::make_shared<const WindGrid>(std::move(truth));
    return {{"fixture", g, g}};
}

inline GridLibrary library_of(WindGrid truth, WindGrid forecast) {
    return {{"fixture", std::make_shared<const WindGrid>(std::move(truth)),
             std::make_shared<const WindGrid>(std::move(forecast))}};
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("habsk_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace habsk::testing
