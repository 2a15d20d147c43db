#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "habsk/geo.hpp"
#include "habsk/timeutil.hpp"

namespace habsk {

struct SoundingSample {
    double altitude_m = 0.0;
    double u = 0.0;
    double v = 0.0;

    friend bool operator==(const SoundingSample&, const SoundingSample&) = default;
};

/// One station's vertical wind profile from a single launch.
struct RadiosondeSounding {
    std::string station_id;
    GeoCoord location;  // launch site; altitude is the surface elevation
    UnixSeconds launch_time = 0;
    std::vector<SoundingSample> samples;  // strictly ascending altitude
};

/// Values used when the file itself does not carry them (for example
/// station and launch time recovered from a STATIONID_YYYYMMDDHH.csv name).
struct SoundingDefaults {
    std::optional<std::string> station_id;
    std::optional<UnixSeconds> launch_time;
};

/// Parses the simplified sounding CSV:
///
///     # station_id: 72376
///     # latitude: 35.23
///     # longitude: -111.82
///     # elevation_m: 2179
///     # launch_time: 2023-08-23T12:00:00Z
///     altitude_m,wind_dir_deg,wind_speed_ms
///     16000,270,10
///
/// The column header may instead be `altitude_m,u_ms,v_ms`. Direction rows
/// use the meteorological "blowing from" convention. Samples come back
/// sorted; duplicate altitudes keep the first row seen.
RadiosondeSounding parse_sounding(std::string_view text, const SoundingDefaults& defaults = {});

/// Reads a sounding file, taking station id and launch time from a
/// STATIONID_YYYYMMDDHH.csv file name when the metadata lines omit them.
RadiosondeSounding read_sounding_file(const std::filesystem::path& path);

}  // namespace habsk
