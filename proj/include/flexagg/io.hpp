#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flexagg/der.hpp"
#include "flexagg/pf.hpp"
#include "json.hpp"

namespace flexagg::io {

using json = nlohmann::json;

/// Feeder description. Unknown fields raise ParseError naming the field.
pf::NetworkModel parse_feeder(const json& j);
pf::NetworkModel read_feeder(const std::string& path);

/// DER fleet description.
der::Fleet parse_fleet(const json& j);
der::Fleet read_fleet(const std::string& path);

json read_json(const std::string& path);

/// "%.12g".
std::string fmt(double v);

/// Comma separated, header first, every number through fmt().
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
/// Returns the numeric rows of a CSV written by write_csv (header checked).
std::vector<std::vector<double>> read_csv(const std::string& path,
                                          const std::vector<std::string>& header);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed = 14695981039346656037ull);
std::string hex64(std::uint64_t v);

}  // namespace flexagg::io
