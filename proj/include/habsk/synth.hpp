#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "habsk/sounding.hpp"
#include "habsk/wind_grid.hpp"

namespace habsk {

struct SynthesisConfig {
    double bin_height = 250.0;            // m
    double altitude_floor = 15000.0;      // m, first bin centre
    double altitude_ceiling = 26500.0;    // m, exclusive end of the bin range
    double grid_resolution = 0.25;        // degrees
    double smoothing_sigma = 2.0;         // grid cells
    double smoothing_truncate = 4.0;      // kernel radius = ceil(truncate * sigma)
    double temporal_step_hours = 3.0;

    /// Throws ConfigError when an invariant fails.
    void validate() const;
    std::size_t level_count() const;
    std::vector<double> bin_centers() const;
};

enum class BinFill { Observed, Interpolated };

struct BinnedProfile {
    std::string station_id;
    GeoCoord location;
    std::vector<double> bin_centers;
    std::vector<double> u;
    std::vector<double> v;
    std::vector<BinFill> fill;
};

/// Bins a sounding onto `cfg.bin_centers()`. A bin owns the half-open
/// altitude range [c - h/2, c + h/2); its value is the sample nearest the
/// centre (ties go to the lower altitude). Empty bins are linearly
/// interpolated between the nearest observed bins and held constant past
/// the outermost observation.
BinnedProfile bin_profile(const RadiosondeSounding& sounding, const SynthesisConfig& cfg);

/// Row-major 2D field, rows = latitude, cols = longitude.
struct Plane {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Plane() = default;
    Plane(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) noexcept { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const noexcept { return values[r * cols + c]; }
};

struct WindPlane {
    Plane u;
    Plane v;
};

/// Latitude/longitude axes covering `box` at `cfg.grid_resolution`.
GridAxes synthesis_horizontal_axes(const BoundingBox& box, const SynthesisConfig& cfg);

/// Index of the nearest station for every (lat, lon) cell, Euclidean in
/// degree space, ties to the lower station index. Station coordinates are
/// clamped into the axes' extent first.
std::vector<std::size_t> nearest_station_map(std::span<const BinnedProfile> profiles,
                                             std::span<const double> latitudes, std::span<const double> longitudes);

/// Nearest-neighbour (Voronoi) plane for one level.
WindPlane rasterize_level(std::span<const BinnedProfile> profiles, std::size_t level_index,
                          std::span<const double> latitudes, std::span<const double> longitudes);
WindPlane rasterize_level(std::span<const BinnedProfile> profiles, std::size_t level_index,
                          const SynthesisConfig& cfg, const BoundingBox& box);

/// Separable Gaussian blur with reflect padding ("abc|cba" mirroring).
/// sigma == 0 returns the input unchanged.
Plane smooth_level(const Plane& plane, double sigma, double truncate = 4.0);

struct StationIngest {
    std::string station_id;
    UnixSeconds launch_time = 0;
    std::size_t samples = 0;
    std::size_t observed_bins = 0;
    std::size_t interpolated_bins = 0;
    bool accepted = false;
    std::string message;
};

struct SynthesisResult {
    WindGrid grid;
    std::vector<StationIngest> stations;
    std::vector<std::string> warnings;
};

/// Single launch time: bin every sounding, rasterize and smooth each level.
/// Stations that fail binning are reported in `report` and skipped; throws
/// EmptyInputError when none survive.
WindGrid synthesize_launch(std::span<const RadiosondeSounding> soundings, const SynthesisConfig& cfg,
                           const BoundingBox& box, std::vector<StationIngest>* report = nullptr);

/// All launch times, stacked along the time axis (kind = synthetic). Launch
/// times with no valid sounding are dropped with a warning.
SynthesisResult synthesize_forecast(std::span<const RadiosondeSounding> soundings, const SynthesisConfig& cfg,
                                    const BoundingBox& box);

/// Inserts linearly interpolated frames so consecutive frames are
/// `step_hours` apart. Native frames are copied unchanged.
WindGrid densify_time(const WindGrid& grid, double step_hours);

}  // namespace habsk
