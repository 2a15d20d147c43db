#pragma once

#include <cmath>
#include <numbers>

namespace habsk {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kMetersPerDegree = kEarthRadiusKm * 1000.0 * std::numbers::pi / 180.0;

constexpr double deg2rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
constexpr double rad2deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

/// Wraps any angle into [0, 360).
double wrap_360(double deg) noexcept;

/// Wraps a longitude into [-180, 180).
double wrap_longitude(double deg) noexcept;

/// Absolute angular difference folded into [0, 180].
double fold_angle(double a_deg, double b_deg) noexcept;

struct GeoCoord {
    double latitude = 0.0;   // degrees, [-90, 90]
    double longitude = 0.0;  // degrees, [-180, 180)
    double altitude = 0.0;   // meters above mean sea level

    /// Clamps latitude and wraps longitude back into range.
    GeoCoord normalized() const noexcept;

    friend bool operator==(const GeoCoord&, const GeoCoord&) = default;
};

struct WindVector {
    double u = 0.0;  // m/s, positive east
    double v = 0.0;  // m/s, positive north

    double magnitude() const noexcept { return std::hypot(u, v); }
    /// Bearing the air moves toward, [0, 360), 0 = north, 90 = east.
    double bearing() const noexcept { return wrap_360(rad2deg(std::atan2(u, v))); }

    static WindVector from_bearing(double bearing_deg, double speed) noexcept {
        const double r = deg2rad(bearing_deg);
        return {speed * std::sin(r), speed * std::cos(r)};
    }

    friend bool operator==(const WindVector&, const WindVector&) = default;
};

/// Great-circle surface distance in km on a spherical Earth; altitude ignored.
double haversine_distance(const GeoCoord& a, const GeoCoord& b) noexcept;

struct Bearing {
    double degrees = 0.0;
    /// Set when a and b are within 1 m horizontally; degrees is then 0.
    bool coincident = false;
};

/// Initial great-circle bearing from a to b.
Bearing bearing_between(const GeoCoord& a, const GeoCoord& b) noexcept;

/// Advects `start` by wind·dt metres on a local equirectangular map.
/// Altitude is unchanged.
GeoCoord displace(const GeoCoord& start, const WindVector& wind, double dt_seconds) noexcept;

}  // namespace habsk
