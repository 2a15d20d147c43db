#include "habsk/geo.hpp"

#include <algorithm>

namespace habsk {

double wrap_360(double deg) noexcept {
    double r = std::fmod(deg, 360.0);
    if (r < 0.0) r += 360.0;
    // fmod of a tiny negative can round back up to 360
    if (r >= 360.0) r -= 360.0;
    return r;
}

double wrap_longitude(double deg) noexcept {
    if (deg >= -180.0 && deg < 180.0) return deg;
    double r = std::fmod(deg + 180.0, 360.0);
    if (r < 0.0) r += 360.0;
    if (r >= 360.0) r -= 360.0;
    return r - 180.0;
}

double fold_angle(double a_deg, double b_deg) noexcept {
    const double d = wrap_360(a_deg - b_deg);
    return d > 180.0 ? 360.0 - d : d;
}

GeoCoord GeoCoord::normalized() const noexcept {
    return {std::clamp(latitude, -90.0, 90.0), wrap_longitude(longitude), altitude};
}

double haversine_distance(const GeoCoord& a, const GeoCoord& b) noexcept {
    const double lat1 = deg2rad(a.latitude);
    const double lat2 = deg2rad(b.latitude);
    const double s_lat = std::sin((lat2 - lat1) / 2.0);
    const double s_lon = std::sin(deg2rad(b.longitude - a.longitude) / 2.0);
    const double h = s_lat * s_lat + std::cos(lat1) * std::cos(lat2) * s_lon * s_lon;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

Bearing bearing_between(const GeoCoord& a, const GeoCoord& b) noexcept {
    if (haversine_distance(a, b) * 1000.0 < 1.0) return {0.0, true};
    const double lat1 = deg2rad(a.latitude);
    const double lat2 = deg2rad(b.latitude);
    const double dlon = deg2rad(b.longitude - a.longitude);
    const double y = std::sin(dlon) * std::cos(lat2);
    const double x = std::cos(lat1) * std::sin(lat2) - std::sin(lat1) * std::cos(lat2) * std::cos(dlon);
    return {wrap_360(rad2deg(std::atan2(y, x))), false};
}

GeoCoord displace(const GeoCoord& start, const WindVector& wind, double dt_seconds) noexcept {
    const double east_m = wind.u * dt_seconds;
    const double north_m = wind.v * dt_seconds;
    const double lon_scale = kMetersPerDegree * std::cos(deg2rad(start.latitude));
    GeoCoord out = start;
    out.latitude += north_m / kMetersPerDegree;
    if (east_m != 0.0 && lon_scale > 0.0) out.longitude += east_m / lon_scale;
    return out.normalized();
}

}  // namespace habsk
