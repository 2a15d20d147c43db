#include "habsk/wind_grid.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "habsk/errors.hpp"

namespace habsk {

std::string to_string(GridKind kind) { return kind == GridKind::Synthetic ? "synthetic" : "forecast-like"; }

GridKind grid_kind_from_string(const std::string& s) {
    if (s == "synthetic") return GridKind::Synthetic;
    if (s == "forecast-like") return GridKind::ForecastLike;
    throw ParseError("unknown grid kind '" + s + "'");
}

namespace {

template <typename T>
void require_ascending(const std::vector<T>& axis, const char* name) {
    if (axis.empty()) throw DataError(fmt::format("grid axis '{}' is empty", name));
    for (std::size_t i = 1; i < axis.size(); ++i)
        if (!(axis[i - 1] < axis[i])) throw DataError(fmt::format("grid axis '{}' is not strictly ascending", name));
}

struct Bracket {
    std::size_t lo = 0;
    std::size_t hi = 0;
    double w = 0.0;  // weight of hi
};

template <typename T>
Bracket bracket(const std::vector<T>& axis, double x, bool clamp, const char* name) {
    const double first = static_cast<double>(axis.front());
    const double last = static_cast<double>(axis.back());
    if (x < first || x > last || std::isnan(x)) {
        if (!clamp)
            throw BoundsError(name, fmt::format("query {} outside '{}' axis [{}, {}]", x, name, first, last));
        if (!(x > first)) return {0, 0, 0.0};
        return {axis.size() - 1, axis.size() - 1, 0.0};
    }
    if (axis.size() == 1) return {0, 0, 0.0};
    auto it = std::upper_bound(axis.begin(), axis.end(), x, [](double q, const T& a) { return q < static_cast<double>(a); });
    std::size_t hi = static_cast<std::size_t>(it - axis.begin());
    if (hi >= axis.size()) return {axis.size() - 1, axis.size() - 1, 0.0};
    const std::size_t lo = hi - 1;
    const double a = static_cast<double>(axis[lo]);
    const double b = static_cast<double>(axis[hi]);
    return {lo, hi, (x - a) / (b - a)};
}

// Vertical bracket on one column. `alt(k)` is ascending in k.
template <typename AltFn>
Bracket vertical_bracket(std::size_t n, AltFn alt, double z, bool clamp) {
    const double first = alt(0);
    const double last = alt(n - 1);
    if (z < first || z > last || std::isnan(z)) {
        if (!clamp)
            throw BoundsError("altitude", fmt::format("query {} m outside 'altitude' axis [{}, {}]", z, first, last));
        if (!(z > first)) return {0, 0, 0.0};
        return {n - 1, n - 1, 0.0};
    }
    if (n == 1) return {0, 0, 0.0};
    std::size_t lo = 0;
    std::size_t hi = n - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (alt(mid) <= z)
            lo = mid;
        else
            hi = mid;
    }
    const double a = alt(lo);
    const double b = alt(hi);
    return {lo, hi, (z - a) / (b - a)};
}

}  // namespace

WindGrid::WindGrid(GridAxes axes, std::vector<double> u, std::vector<double> v, GridKind kind,
                   std::optional<std::vector<double>> cell_altitude, double altitude_spread)
    : axes_(std::move(axes)), u_(std::move(u)), v_(std::move(v)), kind_(kind) {
    require_ascending(axes_.latitudes, "latitude");
    require_ascending(axes_.longitudes, "longitude");
    require_ascending(axes_.times, "time");
    if (axes_.levels.empty()) throw DataError("grid axis 'level' is empty");
    for (std::size_t k = 1; k < axes_.levels.size(); ++k)
        if (!(axes_.levels[k - 1].altitude_m < axes_.levels[k].altitude_m))
            throw DataError("grid axis 'level' is not strictly ascending in altitude");
    for (double lat : axes_.latitudes)
        if (lat < -90.0 || lat > 90.0) throw DataError(fmt::format("latitude {} out of range", lat));

    const std::size_t n = axes_.cell_count();
    if (u_.size() != n || v_.size() != n)
        throw DataError(fmt::format("wind arrays have {}/{} values, axes require {}", u_.size(), v_.size(), n));
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(u_[i]) || !std::isfinite(v_[i]))
            throw DataError(fmt::format("non-finite wind value at flat index {}", i));

    const bool pressure = axes_.levels.front().pressure_hpa.has_value();
    for (const auto& lv : axes_.levels)
        if (lv.pressure_hpa.has_value() != pressure)
            throw DataError("grid mixes pressure-based and altitude-based levels");

    if (cell_altitude) {
        cell_altitude_ = std::move(*cell_altitude);
        if (cell_altitude_.size() != n)
            throw DataError(fmt::format("altitude field has {} values, axes require {}", cell_altitude_.size(), n));
        const std::size_t nl = axes_.levels.size();
        const std::size_t nlat = axes_.latitudes.size();
        const std::size_t nlon = axes_.longitudes.size();
        for (std::size_t t = 0; t < axes_.times.size(); ++t)
            for (std::size_t k = 0; k < nl; ++k)
                for (std::size_t i = 0; i < nlat; ++i)
                    for (std::size_t j = 0; j < nlon; ++j) {
                        const double z = cell_altitude_[index(t, k, i, j)];
                        if (!std::isfinite(z) || std::abs(z - axes_.levels[k].altitude_m) > altitude_spread)
                            throw DataError(fmt::format(
                                "cell altitude {} m deviates more than {} m from level {} nominal {} m", z,
                                altitude_spread, k, axes_.levels[k].altitude_m));
                        if (k > 0 && !(cell_altitude_[index(t, k - 1, i, j)] < z))
                            throw DataError("cell altitudes are not ascending along a column");
                    }
    }
}

WindGrid WindGrid::filled(GridAxes axes, GridKind kind, const Filler& fill) {
    const std::size_t n = axes.cell_count();
    std::vector<double> u(n), v(n);
    std::size_t idx = 0;
    for (std::size_t t = 0; t < axes.times.size(); ++t)
        for (std::size_t k = 0; k < axes.levels.size(); ++k)
            for (std::size_t i = 0; i < axes.latitudes.size(); ++i)
                for (std::size_t j = 0; j < axes.longitudes.size(); ++j, ++idx) {
                    const WindVector w = fill(t, k, i, j);
                    u[idx] = w.u;
                    v[idx] = w.v;
                }
    return WindGrid(std::move(axes), std::move(u), std::move(v), kind);
}

BoundingBox WindGrid::bounds() const noexcept {
    return {axes_.latitudes.front(), axes_.latitudes.back(), axes_.longitudes.front(), axes_.longitudes.back()};
}

WindVector sample_wind(const WindGrid& grid, const GeoCoord& where, UnixSeconds when, SampleOptions opts) {
    const auto& ax = grid.axes();
    const Bracket bt = bracket(ax.times, static_cast<double>(when), opts.clamp, "time");
    const Bracket bi = bracket(ax.latitudes, where.latitude, opts.clamp, "latitude");
    const Bracket bj = bracket(ax.longitudes, where.longitude, opts.clamp, "longitude");
    const std::size_t nl = ax.levels.size();

    const auto u = grid.u();
    const auto v = grid.v();
    double su = 0.0;
    double sv = 0.0;

    // Altitude-level grids share one vertical bracket across all corners.
    std::optional<Bracket> shared_bk;
    if (!grid.has_cell_altitude())
        shared_bk = vertical_bracket(nl, [&](std::size_t k) { return ax.levels[k].altitude_m; }, where.altitude,
                                     opts.clamp);

    const std::size_t ts[2] = {bt.lo, bt.hi};
    const double wt[2] = {1.0 - bt.w, bt.w};
    const std::size_t is[2] = {bi.lo, bi.hi};
    const double wi[2] = {1.0 - bi.w, bi.w};
    const std::size_t js[2] = {bj.lo, bj.hi};
    const double wj[2] = {1.0 - bj.w, bj.w};
    for (int a = 0; a < 2; ++a) {
        if (wt[a] == 0.0) continue;
        for (int b = 0; b < 2; ++b) {
            if (wi[b] == 0.0) continue;
            for (int c = 0; c < 2; ++c) {
                if (wj[c] == 0.0) continue;
                const double w = wt[a] * wi[b] * wj[c];
                const std::size_t t = ts[a], i = is[b], j = js[c];
                const Bracket bk = shared_bk ? *shared_bk
                                             : vertical_bracket(
                                                   nl, [&](std::size_t k) { return grid.altitude_at(t, k, i, j); },
                                                   where.altitude, opts.clamp);
                const std::size_t i0 = grid.index(t, bk.lo, i, j);
                const std::size_t i1 = grid.index(t, bk.hi, i, j);
                su += w * ((1.0 - bk.w) * u[i0] + bk.w * u[i1]);
                sv += w * ((1.0 - bk.w) * v[i0] + bk.w * v[i1]);
            }
        }
    }
    return {su, sv};
}

void sample_column(const WindGrid& grid, double latitude, double longitude, UnixSeconds when,
                   std::vector<ColumnSample>& out, SampleOptions opts) {
    const auto& ax = grid.axes();
    const Bracket bt = bracket(ax.times, static_cast<double>(when), opts.clamp, "time");
    const Bracket bi = bracket(ax.latitudes, latitude, opts.clamp, "latitude");
    const Bracket bj = bracket(ax.longitudes, longitude, opts.clamp, "longitude");
    const std::size_t nl = ax.levels.size();
    out.assign(nl, ColumnSample{});

    const auto u = grid.u();
    const auto v = grid.v();
    const std::size_t ts[2] = {bt.lo, bt.hi};
    const double wt[2] = {1.0 - bt.w, bt.w};
    const std::size_t is[2] = {bi.lo, bi.hi};
    const double wi[2] = {1.0 - bi.w, bi.w};
    const std::size_t js[2] = {bj.lo, bj.hi};
    const double wj[2] = {1.0 - bj.w, bj.w};
    for (int a = 0; a < 2; ++a) {
        if (wt[a] == 0.0) continue;
        for (int b = 0; b < 2; ++b) {
            if (wi[b] == 0.0) continue;
            for (int c = 0; c < 2; ++c) {
                if (wj[c] == 0.0) continue;
                const double w = wt[a] * wi[b] * wj[c];
                for (std::size_t k = 0; k < nl; ++k) {
                    const std::size_t idx = grid.index(ts[a], k, is[b], js[c]);
                    out[k].wind.u += w * u[idx];
                    out[k].wind.v += w * v[idx];
                    out[k].altitude_m += w * grid.altitude_at(ts[a], k, is[b], js[c]);
                }
            }
        }
    }
}

std::vector<ColumnSample> sample_column(const WindGrid& grid, double latitude, double longitude, UnixSeconds when,
                                        SampleOptions opts) {
    std::vector<ColumnSample> out;
    sample_column(grid, latitude, longitude, when, out, opts);
    return out;
}

std::vector<double> linspace_step(double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) throw ConfigError("linspace_step needs step > 0 and hi >= lo");
    const double span = (hi - lo) / step;
    const auto n = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
    return out;
}

}  // namespace habsk
