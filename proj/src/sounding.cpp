#include "habsk/sounding.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "habsk/errors.hpp"

namespace habsk {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_number(std::string_view field, std::size_t line, const char* what) {
    double value = 0.0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (field.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value))
        throw ParseError(fmt::format("invalid {} '{}'", what, field), line);
    return value;
}

enum class Columns { DirectionSpeed, Components };

}  // namespace

RadiosondeSounding parse_sounding(std::string_view text, const SoundingDefaults& defaults) {
    if (trim(text).empty()) throw EmptyInputError("empty sounding input");

    RadiosondeSounding snd;
    std::optional<double> lat, lon, elevation;
    std::optional<std::string> station = defaults.station_id;
    std::optional<UnixSeconds> launch = defaults.launch_time;
    std::optional<Columns> columns;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) continue;

        if (line.front() == '#') {
            const auto body = trim(line.substr(1));
            const auto colon = body.find(':');
            if (colon == std::string_view::npos) continue;  // free-form comment
            const std::string key(trim(body.substr(0, colon)));
            const std::string_view value = trim(body.substr(colon + 1));
            if (key == "station_id")
                station = std::string(value);
            else if (key == "latitude")
                lat = parse_number(value, line_no, "latitude");
            else if (key == "longitude")
                lon = parse_number(value, line_no, "longitude");
            else if (key == "elevation_m")
                elevation = parse_number(value, line_no, "elevation");
            else if (key == "launch_time") {
                try {
                    launch = parse_utc(value);
                } catch (const ParseError& e) {
                    throw ParseError(e.what(), line_no);
                }
            }
            continue;
        }

        const auto fields = split(line, ',');
        if (!columns) {
            if (fields.size() == 3 && fields[0] == "altitude_m" && fields[1] == "wind_dir_deg" &&
                fields[2] == "wind_speed_ms")
                columns = Columns::DirectionSpeed;
            else if (fields.size() == 3 && fields[0] == "altitude_m" && fields[1] == "u_ms" && fields[2] == "v_ms")
                columns = Columns::Components;
            else
                throw ParseError("expected column header 'altitude_m,wind_dir_deg,wind_speed_ms' or "
                                 "'altitude_m,u_ms,v_ms'",
                                 line_no);
            continue;
        }
        if (fields.size() != 3)
            throw ParseError(fmt::format("expected 3 fields, found {}", fields.size()), line_no);

        SoundingSample s;
        s.altitude_m = parse_number(fields[0], line_no, "altitude");
        const double a = parse_number(fields[1], line_no, *columns == Columns::DirectionSpeed ? "direction" : "u");
        const double b = parse_number(fields[2], line_no, *columns == Columns::DirectionSpeed ? "speed" : "v");
        if (*columns == Columns::DirectionSpeed) {
            if (b < 0.0) throw ParseError("negative wind speed", line_no);
            const double r = deg2rad(a);
            s.u = -b * std::sin(r);
            s.v = -b * std::cos(r);
        } else {
            s.u = a;
            s.v = b;
        }
        snd.samples.push_back(s);
    }

    if (!columns) throw EmptyInputError("sounding has no column header");
    if (snd.samples.empty()) throw EmptyInputError("sounding has no data rows");
    if (!lat || !lon) throw ParseError("sounding metadata must include latitude and longitude");
    if (!station) throw ParseError("sounding has no station_id");
    if (!launch) throw ParseError("sounding has no launch_time");

    snd.station_id = *station;
    snd.location = GeoCoord{*lat, *lon, elevation.value_or(0.0)}.normalized();
    snd.launch_time = *launch;

    std::stable_sort(snd.samples.begin(), snd.samples.end(),
                     [](const SoundingSample& x, const SoundingSample& y) { return x.altitude_m < y.altitude_m; });
    auto last = std::unique(snd.samples.begin(), snd.samples.end(),
                            [](const SoundingSample& x, const SoundingSample& y) { return x.altitude_m == y.altitude_m; });
    snd.samples.erase(last, snd.samples.end());
    return snd;
}

RadiosondeSounding read_sounding_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open sounding " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();

    SoundingDefaults defaults;
    const std::string stem = path.stem().string();
    const auto us = stem.rfind('_');
    if (us != std::string::npos && us > 0) {
        defaults.station_id = stem.substr(0, us);
        try {
            defaults.launch_time = parse_utc(stem.substr(us + 1));
        } catch (const ParseError&) {
            defaults.launch_time.reset();
        }
    }
    try {
        return parse_sounding(ss.str(), defaults);
    } catch (const ParseError& e) {
        throw ParseError(path.filename().string() + ": " + e.what());
    } catch (const EmptyInputError& e) {
        throw EmptyInputError(path.filename().string() + ": " + e.what());
    }
}

}  // namespace habsk
