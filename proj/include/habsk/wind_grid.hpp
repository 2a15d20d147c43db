#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "habsk/geo.hpp"
#include "habsk/timeutil.hpp"

namespace habsk {

enum class GridKind { ForecastLike, Synthetic };

std::string to_string(GridKind kind);
GridKind grid_kind_from_string(const std::string& s);

/// One entry of the vertical axis. Pressure-based levels carry a nominal
/// (mean) altitude plus a per-cell altitude field stored on the grid.
struct Level {
    double altitude_m = 0.0;
    std::optional<double> pressure_hpa;

    friend bool operator==(const Level&, const Level&) = default;
};

struct GridAxes {
    std::vector<double> latitudes;   // ascending, degrees
    std::vector<double> longitudes;  // ascending, degrees
    std::vector<Level> levels;       // ascending altitude
    std::vector<UnixSeconds> times;  // ascending

    std::size_t cell_count() const noexcept {
        return latitudes.size() * longitudes.size() * levels.size() * times.size();
    }
};

struct BoundingBox {
    double lat_min = 0.0, lat_max = 0.0;
    double lon_min = 0.0, lon_max = 0.0;

    bool contains(double lat, double lon) const noexcept {
        return lat >= lat_min && lat <= lat_max && lon >= lon_min && lon <= lon_max;
    }
};

/// Dense u/v wind field indexed [time][level][lat][lon]. Immutable once
/// constructed, so one instance can be shared by concurrent episode workers.
class WindGrid {
public:
    static constexpr double kDefaultAltitudeSpread = 500.0;

    /// Validates extents, axis ordering, finiteness and (for pressure grids)
    /// that every cell altitude lies within `altitude_spread` of its level's
    /// nominal altitude and increases monotonically up each column.
    WindGrid(GridAxes axes, std::vector<double> u, std::vector<double> v, GridKind kind,
             std::optional<std::vector<double>> cell_altitude = std::nullopt,
             double altitude_spread = kDefaultAltitudeSpread);

    using Filler = std::function<WindVector(std::size_t t, std::size_t level, std::size_t lat, std::size_t lon)>;

    /// Builds an altitude-level grid whose node values come from `fill`.
    static WindGrid filled(GridAxes axes, GridKind kind, const Filler& fill);

    const GridAxes& axes() const noexcept { return axes_; }
    const std::vector<double>& latitudes() const noexcept { return axes_.latitudes; }
    const std::vector<double>& longitudes() const noexcept { return axes_.longitudes; }
    const std::vector<Level>& levels() const noexcept { return axes_.levels; }
    const std::vector<UnixSeconds>& times() const noexcept { return axes_.times; }
    GridKind kind() const noexcept { return kind_; }
    bool has_cell_altitude() const noexcept { return !cell_altitude_.empty(); }

    std::size_t index(std::size_t t, std::size_t level, std::size_t lat, std::size_t lon) const noexcept {
        return ((t * axes_.levels.size() + level) * axes_.latitudes.size() + lat) * axes_.longitudes.size() + lon;
    }

    WindVector wind_at(std::size_t t, std::size_t level, std::size_t lat, std::size_t lon) const noexcept {
        const auto i = index(t, level, lat, lon);
        return {u_[i], v_[i]};
    }
    /// Per-cell altitude for pressure grids, nominal level altitude otherwise.
    double altitude_at(std::size_t t, std::size_t level, std::size_t lat, std::size_t lon) const noexcept {
        return cell_altitude_.empty() ? axes_.levels[level].altitude_m
                                      : cell_altitude_[index(t, level, lat, lon)];
    }

    std::span<const double> u() const noexcept { return u_; }
    std::span<const double> v() const noexcept { return v_; }
    std::span<const double> cell_altitude() const noexcept { return cell_altitude_; }

    BoundingBox bounds() const noexcept;
    UnixSeconds time_begin() const noexcept { return axes_.times.front(); }
    UnixSeconds time_end() const noexcept { return axes_.times.back(); }

private:
    GridAxes axes_;
    std::vector<double> u_;
    std::vector<double> v_;
    std::vector<double> cell_altitude_;
    GridKind kind_;
};

struct SampleOptions {
    /// Clamp out-of-range queries to the nearest boundary instead of throwing.
    bool clamp = true;
};

/// 4-linear interpolation (lat, lon, altitude, time). Vertical interpolation
/// runs per corner column on that column's own altitudes, so the result is
/// a convex combination of at most 16 node values.
WindVector sample_wind(const WindGrid& grid, const GeoCoord& where, UnixSeconds when, SampleOptions opts = {});

struct ColumnSample {
    double altitude_m = 0.0;
    WindVector wind;
};

/// Every level of the grid at (lat, lon, when): bilinear horizontally,
/// linear in time, no vertical interpolation.
void sample_column(const WindGrid& grid, double latitude, double longitude, UnixSeconds when,
                   std::vector<ColumnSample>& out, SampleOptions opts = {});
std::vector<ColumnSample> sample_column(const WindGrid& grid, double latitude, double longitude, UnixSeconds when,
                                        SampleOptions opts = {});

/// Evenly spaced axis from `lo` to `hi` inclusive (hi snapped when within
/// 1e-9 of a step).
std::vector<double> linspace_step(double lo, double hi, double step);

}  // namespace habsk
