#include "habsk/grid_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "habsk/binary_io.hpp"
#include "habsk/errors.hpp"

namespace habsk {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kFormatName = "habsk-wind-grid";
constexpr int kFormatVersion = 1;

void write_csv_field(std::ostream& os, std::span<const double> values, std::size_t row_len) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        os << fmt::format("{}", static_cast<float>(values[i]));
        os << (((i + 1) % row_len == 0) ? '\n' : ',');
    }
}

void read_csv_values(std::istream& is, std::vector<double>& out, std::size_t expected) {
    std::string line;
    std::size_t line_no = 0;
    out.clear();
    out.reserve(expected);
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p < end) {
            float f = 0.0f;
            auto [next, ec] = std::from_chars(p, end, f);
            if (ec != std::errc{}) throw ParseError("bad number in CSV payload", line_no);
            out.push_back(static_cast<double>(f));
            p = next;
            if (p < end) {
                if (*p != ',') throw ParseError("expected ',' in CSV payload", line_no);
                ++p;
            }
        }
    }
    if (out.size() != expected)
        throw DataError(fmt::format("CSV payload holds {} values, header requires {}", out.size(), expected));
}

template <typename T>
std::vector<T> json_array(const json& j, const char* name) {
    if (!j.contains(name) || !j.at(name).is_array()) throw ParseError(fmt::format("header is missing axis '{}'", name));
    return j.at(name).get<std::vector<T>>();
}

}  // namespace

void write_grid(const WindGrid& grid, const fs::path& header_path, PayloadEncoding encoding,
                const json& metadata) {
    const auto& ax = grid.axes();
    fs::path payload = header_path;
    payload.replace_extension(encoding == PayloadEncoding::Csv ? ".csv" : ".bin");

    json levels = json::array();
    for (const auto& lv : ax.levels) {
        json l = {{"altitude_m", lv.altitude_m}};
        if (lv.pressure_hpa) l["pressure_hpa"] = *lv.pressure_hpa;
        levels.push_back(l);
    }
    json times = json::array();
    for (UnixSeconds t : ax.times) times.push_back(format_utc(t));

    json fields = json::array({"u", "v"});
    if (grid.has_cell_altitude()) fields.push_back("altitude");

    json header = {
        {"format", kFormatName},
        {"version", kFormatVersion},
        {"kind", to_string(grid.kind())},
        {"per_level_altitude", grid.has_cell_altitude()},
        {"axes",
         {{"latitude", ax.latitudes}, {"longitude", ax.longitudes}, {"level", levels}, {"time", times}}},
        {"units",
         {{"latitude", "degrees_north"},
          {"longitude", "degrees_east"},
          {"altitude", "m"},
          {"pressure", "hPa"},
          {"u", "m/s"},
          {"v", "m/s"},
          {"time", "UTC"}}},
        {"payload",
         {{"file", payload.filename().string()},
          {"encoding", encoding == PayloadEncoding::Csv ? "csv" : "float32-le"},
          {"order", "[time][level][lat][lon]"},
          {"fields", fields}}},
    };

    if (!metadata.is_null()) header["metadata"] = metadata;

    {
        std::ofstream hs(header_path, std::ios::binary);
        if (!hs) throw DataError("cannot write " + header_path.string());
        hs << header.dump(2) << '\n';
    }

    std::ofstream ps(payload, std::ios::binary);
    if (!ps) throw DataError("cannot write " + payload.string());
    if (encoding == PayloadEncoding::Csv) {
        const std::size_t row = ax.longitudes.size();
        write_csv_field(ps, grid.u(), row);
        write_csv_field(ps, grid.v(), row);
        if (grid.has_cell_altitude()) write_csv_field(ps, grid.cell_altitude(), row);
    } else {
        binio::write_f32_span(ps, grid.u());
        binio::write_f32_span(ps, grid.v());
        if (grid.has_cell_altitude()) binio::write_f32_span(ps, grid.cell_altitude());
    }
    if (!ps) throw DataError("failed writing " + payload.string());
}

WindGrid read_grid(const fs::path& header_path) {
    std::ifstream hs(header_path);
    if (!hs) throw DataError("cannot open grid header " + header_path.string());
    json header;
    try {
        header = json::parse(hs);
    } catch (const json::parse_error& e) {
        throw ParseError(fmt::format("grid header {} is not valid JSON: {}", header_path.string(), e.what()));
    }

    try {
        if (header.value("format", std::string{}) != kFormatName)
            throw ParseError("not a " + std::string(kFormatName) + " header: " + header_path.string());
        if (header.value("version", 0) != kFormatVersion)
            throw ParseError(fmt::format("unsupported grid format version {}", header.value("version", 0)));

        const json& axes = header.at("axes");
        GridAxes ax;
        ax.latitudes = json_array<double>(axes, "latitude");
        ax.longitudes = json_array<double>(axes, "longitude");
        for (const auto& l : axes.at("level")) {
            Level lv;
            lv.altitude_m = l.at("altitude_m").get<double>();
            if (l.contains("pressure_hpa")) lv.pressure_hpa = l.at("pressure_hpa").get<double>();
            ax.levels.push_back(lv);
        }
        for (const auto& t : axes.at("time")) ax.times.push_back(parse_utc(t.get<std::string>()));

        const bool per_level_alt = header.at("per_level_altitude").get<bool>();
        const GridKind kind = grid_kind_from_string(header.at("kind").get<std::string>());
        const json& pl = header.at("payload");
        const fs::path payload = header_path.parent_path() / pl.at("file").get<std::string>();
        const std::string encoding = pl.at("encoding").get<std::string>();
        if (pl.value("order", std::string{}) != "[time][level][lat][lon]")
            throw ParseError("unsupported payload order");

        const std::size_t n = ax.cell_count();
        if (n == 0) throw DataError("grid header declares an empty axis");
        const std::size_t nfields = per_level_alt ? 3 : 2;
        std::vector<double> u(n), v(n);
        std::optional<std::vector<double>> alt;
        if (per_level_alt) alt.emplace(n);

        if (encoding == "float32-le") {
            std::ifstream ps(payload, std::ios::binary | std::ios::ate);
            if (!ps) throw DataError("cannot open grid payload " + payload.string());
            const auto bytes = static_cast<std::size_t>(ps.tellg());
            if (bytes != n * nfields * 4)
                throw DataError(fmt::format("payload {} has {} bytes, header requires {}", payload.string(), bytes,
                                            n * nfields * 4));
            ps.seekg(0);
            binio::read_f32_into(ps, std::span<double>(u));
            binio::read_f32_into(ps, std::span<double>(v));
            if (alt) binio::read_f32_into(ps, std::span<double>(*alt));
        } else if (encoding == "csv") {
            std::ifstream ps(payload);
            if (!ps) throw DataError("cannot open grid payload " + payload.string());
            std::vector<double> all;
            read_csv_values(ps, all, n * nfields);
            std::copy(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), u.begin());
            std::copy(all.begin() + static_cast<std::ptrdiff_t>(n), all.begin() + static_cast<std::ptrdiff_t>(2 * n),
                      v.begin());
            if (alt) std::copy(all.begin() + static_cast<std::ptrdiff_t>(2 * n), all.end(), alt->begin());
        } else {
            throw ParseError("unknown payload encoding '" + encoding + "'");
        }
        return WindGrid(std::move(ax), std::move(u), std::move(v), kind, std::move(alt));
    } catch (const json::exception& e) {
        throw ParseError(fmt::format("malformed grid header {}: {}", header_path.string(), e.what()));
    }
}

}  // namespace habsk
