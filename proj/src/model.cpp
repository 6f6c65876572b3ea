#include "parksense/model.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "parksense/error.hpp"
#include "parksense/text.hpp"

namespace parksense {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidGeometry: return "invalid-geometry";
    case ErrorKind::Kind: return "kind";
    case ErrorKind::Ordering: return "ordering";
    case ErrorKind::State: return "state";
    case ErrorKind::Map: return "map";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Range: return "range";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Routing: return "routing";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what, std::optional<std::size_t> line)
    : std::runtime_error(what), kind_(kind), line_(line) {}

bool is_vehicle(std::string_view class_label) {
  static constexpr std::array<std::string_view, 4> kVehicles{"car", "van", "bus", "truck"};
  return std::find(kVehicles.begin(), kVehicles.end(), class_label) != kVehicles.end();
}

std::size_t count_occupied(const StatusMap& statuses) {
  return static_cast<std::size_t>(std::count(statuses.begin(), statuses.end(), SpaceStatus::Occupied));
}

bool is_final_source(StatusSource source) { return source != StatusSource::Bg; }

std::string_view to_string(SpaceStatus status) {
  switch (status) {
    case SpaceStatus::Occupied: return "occupied";
    case SpaceStatus::Vacant: return "vacant";
    case SpaceStatus::Unknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(StatusSource source) {
  switch (source) {
    case StatusSource::Ssd: return "SSD";
    case StatusSource::Bg: return "BG";
    case StatusSource::FusedWarning: return "FUSED_WARNING";
    case StatusSource::FusedOcclusion: return "FUSED_OCCLUSION";
  }
  return "SSD";
}

std::string_view to_string(DetectorKind kind) { return kind == DetectorKind::Ssd ? "SSD" : "BG"; }

SpaceStatus parse_status(std::string_view text) {
  if (text == "occupied") return SpaceStatus::Occupied;
  if (text == "vacant") return SpaceStatus::Vacant;
  if (text == "unknown") return SpaceStatus::Unknown;
  throw Error(ErrorKind::Parse, "unknown status '" + std::string(text) + "'");
}

StatusSource parse_source(std::string_view text) {
  if (text == "SSD") return StatusSource::Ssd;
  if (text == "BG") return StatusSource::Bg;
  if (text == "FUSED_WARNING") return StatusSource::FusedWarning;
  if (text == "FUSED_OCCLUSION") return StatusSource::FusedOcclusion;
  throw Error(ErrorKind::Parse, "unknown source '" + std::string(text) + "'");
}

namespace text {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace text
}  // namespace parksense
