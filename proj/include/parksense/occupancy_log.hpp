#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "parksense/model.hpp"

namespace parksense {

inline constexpr std::string_view kOccupancyCsvHeader = "ts_ms,node_id,space_id,status,source";

/// Append-only CSV: one record per LF-terminated line after the header.
void write_occupancy_row(std::ostream& out, const OccupancyRecord& record);
void write_occupancy_csv(std::ostream& out, std::span<const OccupancyRecord> records);
std::string occupancy_csv(std::span<const OccupancyRecord> records);

/// Parses a log. The header is optional. A final line without LF that does
/// not parse is an interrupted append and is ignored; any other malformed row
/// throws ErrorKind::Parse with its line number.
std::vector<OccupancyRecord> parse_occupancy_csv(std::string_view text);
std::vector<OccupancyRecord> load_occupancy_csv(const std::filesystem::path& path);

}  // namespace parksense
