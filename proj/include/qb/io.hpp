#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qb/stadium.hpp"

namespace qb {

// RFC 4180 CSV: header row, CRLF line endings, '.' decimal separator,
// numbers at 17 significant digits so reruns are byte-identical.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

std::string format_double(double v);   // shortest round-trip-safe decimal

// 16-bit binary PGM (P5, maxval 65535, big-endian samples per the Netpbm
// spec) with linear min-max scaling; the scaling is recorded in a JSON
// sidecar at path + ".json".
void write_pgm16(const std::filesystem::path& path, const DensityGrid& dg);

// 2-D field dump, magic "QBG1": little-endian header
// {char magic[4], u32 nx, u32 ny, u32 reserved} then ny*nx doubles row-major.
void write_qbg1(const std::filesystem::path& path, int nx, int ny,
                const std::vector<double>& values);
std::vector<double> read_qbg1(const std::filesystem::path& path, int& nx, int& ny);

// JSON with 2-space indent and alphabetically ordered keys (nlohmann default
// map ordering), so equal documents serialize to equal bytes.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

} // namespace qb
