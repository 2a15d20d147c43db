#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "habsk/wind_grid.hpp"

namespace habsk {

enum class PayloadEncoding { Float32LE, Csv };

/// Canonical forecast interchange format.
///
/// `<name>.json` holds the header: axes, units, grid kind and whether a
/// per-cell altitude field follows the winds. The payload file named in the
/// header (`<name>.bin` or `<name>.csv`, same directory) stores u, then v,
/// then the optional altitude field, each in [time][level][lat][lon]
/// row-major order. Binary payloads are little-endian float32; CSV payloads
/// hold one latitude row (all longitudes) per line.
/// A non-null `metadata` object is stored verbatim under "metadata".
void write_grid(const WindGrid& grid, const std::filesystem::path& header_path,
                PayloadEncoding encoding = PayloadEncoding::Float32LE,
                const nlohmann::json& metadata = nullptr);

/// Loads and validates a grid. Extent mismatches between header and payload
/// raise DataError before any WindGrid is constructed.
WindGrid read_grid(const std::filesystem::path& header_path);

}  // namespace habsk
