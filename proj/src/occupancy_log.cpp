#include "parksense/occupancy_log.hpp"

#include <fmt/format.h>

#include "parksense/error.hpp"
#include "parksense/text.hpp"

namespace parksense {

void write_occupancy_row(std::ostream& out, const OccupancyRecord& r) {
  out << fmt::format("{},{},{},{},{}\n", r.ts, r.node_id, r.space_id, to_string(r.status), to_string(r.source));
}

void write_occupancy_csv(std::ostream& out, std::span<const OccupancyRecord> records) {
  out << occupancy_csv(records);
}

std::string occupancy_csv(std::span<const OccupancyRecord> records) {
  std::string out(kOccupancyCsvHeader);
  out += '\n';
  auto it = std::back_inserter(out);
  for (const auto& r : records) {
    fmt::format_to(it, "{},{},{},{},{}\n", r.ts, r.node_id, r.space_id, to_string(r.status), to_string(r.source));
  }
  return out;
}

std::vector<OccupancyRecord> parse_occupancy_csv(std::string_view body) {
  std::vector<OccupancyRecord> out;
  text::LineCursor lines(body);
  std::string_view line;
  while (lines.next(line)) {
    if (lines.number() == 1 && line == kOccupancyCsvHeader) continue;
    try {
      const auto f = text::split(line, ',');
      if (f.size() != 5) throw Error(ErrorKind::Parse, fmt::format("expected 5 fields, got {}", f.size()));
      OccupancyRecord r;
      auto ts = text::to_int<TimestampMs>(f[0]);
      if (!ts) throw Error(ErrorKind::Parse, fmt::format("ts_ms '{}' is not an integer", f[0]));
      if (f[1].empty() || f[2].empty()) throw Error(ErrorKind::Parse, "empty node_id or space_id");
      r.ts = *ts;
      r.node_id = std::string(f[1]);
      r.space_id = std::string(f[2]);
      r.status = parse_status(f[3]);
      r.source = parse_source(f[4]);
      out.push_back(std::move(r));
    } catch (const Error& e) {
      if (!lines.terminated()) break;
      throw Error(ErrorKind::Parse, fmt::format("row {}: {}", lines.number(), e.what()), lines.number());
    }
  }
  return out;
}

std::vector<OccupancyRecord> load_occupancy_csv(const std::filesystem::path& path) {
  try {
    return parse_occupancy_csv(text::read_file(path.string()));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Parse) throw;
    throw Error(ErrorKind::Parse, fmt::format("{}: {}", path.string(), e.what()), e.line());
  }
}

}  // namespace parksense
