#include "qb/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>

#include "qb/errors.hpp"

namespace qb {

namespace {

std::ofstream open_binary(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open for writing: " + path.string());
    return f;
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw NumericalError("failed to format double");
    return std::string(buf, end);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    if (header.empty()) throw ValidationError("header", "must have at least one column");
    for (const auto& row : rows)
        if (row.size() != header.size())
            throw DimensionMismatchError("rows", "row width does not match the header");

    std::ofstream f = open_binary(path);   // binary keeps CRLF intact on all platforms
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) f << ',';
        f << header[c];
    }
    f << "\r\n";
    char buf[40];
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) f << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", row[c]);
            f << buf;
        }
        f << "\r\n";
    }
    f.flush();
    if (!f) throw Error("short write: " + path.string());
}

void write_pgm16(const std::filesystem::path& path, const DensityGrid& dg) {
    if (dg.nx < 1 || dg.ny < 1 ||
        dg.values.size() != static_cast<std::size_t>(dg.nx) * static_cast<std::size_t>(dg.ny))
        throw DimensionMismatchError("density", "grid dimensions do not match the data");

    const auto [lo_it, hi_it] = std::minmax_element(dg.values.begin(), dg.values.end());
    const double lo = *lo_it, hi = *hi_it;
    const double span = hi > lo ? hi - lo : 1.0;

    std::ofstream f = open_binary(path);
    f << "P5\n" << dg.nx << ' ' << dg.ny << "\n65535\n";
    std::vector<unsigned char> bytes(dg.values.size() * 2);
    for (std::size_t i = 0; i < dg.values.size(); ++i) {
        const double s = (dg.values[i] - lo) / span;
        const auto q = static_cast<std::uint16_t>(std::lround(s * 65535.0));
        bytes[2 * i] = static_cast<unsigned char>(q >> 8);       // big-endian sample
        bytes[2 * i + 1] = static_cast<unsigned char>(q & 0xFF);
    }
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    f.flush();
    if (!f) throw Error("short write: " + path.string());

    nlohmann::json side;
    side["dx"] = dg.dx;
    side["dy"] = dg.dy;
    side["max_value"] = hi;
    side["min_value"] = lo;
    side["nx"] = dg.nx;
    side["ny"] = dg.ny;
    side["scaling"] = "linear";
    write_json(path.string() + ".json", side);
}

namespace {

void put_u32(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& f) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace

void write_qbg1(const std::filesystem::path& path, int nx, int ny,
                const std::vector<double>& values) {
    if (nx < 1 || ny < 1) throw InvalidDimensionError("nx", "grid dimensions must be >= 1");
    if (values.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny))
        throw DimensionMismatchError("values", "size does not match nx*ny");
    std::ofstream f = open_binary(path);
    f.write("QBG1", 4);
    put_u32(f, static_cast<std::uint32_t>(nx));
    put_u32(f, static_cast<std::uint32_t>(ny));
    put_u32(f, 0);
    f.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    f.flush();
    if (!f) throw Error("short write: " + path.string());
}

std::vector<double> read_qbg1(const std::filesystem::path& path, int& nx, int& ny) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for reading: " + path.string());
    char magic[4];
    f.read(magic, 4);
    if (!f || std::string(magic, 4) != "QBG1")
        throw ValidationError("file", "not a QBG1 grid file: " + path.string());
    const std::uint32_t unx = get_u32(f);
    const std::uint32_t uny = get_u32(f);
    get_u32(f);   // reserved
    if (!f || unx < 1 || uny < 1 || unx > (1u << 20) || uny > (1u << 20))
        throw ValidationError("file", "corrupt QBG1 header: " + path.string());
    std::vector<double> values(static_cast<std::size_t>(unx) * uny);
    f.read(reinterpret_cast<char*>(values.data()),
           static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!f) throw ValidationError("file", "truncated QBG1 payload: " + path.string());
    nx = static_cast<int>(unx);
    ny = static_cast<int>(uny);
    return values;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream f = open_binary(path);
    f << j.dump(2) << '\n';
    f.flush();
    if (!f) throw Error("short write: " + path.string());
}

} // namespace qb
