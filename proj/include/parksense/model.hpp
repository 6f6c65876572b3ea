#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "parksense/geometry.hpp"

namespace parksense {

using TimestampMs = std::int64_t;

struct ParkingSpace {
  std::string space_id;
  BoundingBox rect;
  std::vector<std::string> neighbors;
  std::string floor;
  std::string node_id;
};

enum class DetectorKind { Ssd, Bg };

struct Detection {
  std::string node_id;
  std::uint64_t frame_seq = 0;
  TimestampMs ts = 0;
  DetectorKind kind = DetectorKind::Ssd;
  std::string class_label;
  BoundingBox bbox;
  double score = 0.0;

  bool operator==(const Detection&) const = default;
};

inline constexpr std::string_view kBlobLabel = "blob";

/// Closed vehicle vocabulary: car, van, bus, truck. Case-sensitive.
bool is_vehicle(std::string_view class_label);

enum class SpaceStatus : std::uint8_t { Unknown, Occupied, Vacant };

/// Per-space statuses, index-aligned with a node's space list.
using StatusMap = std::vector<SpaceStatus>;

std::size_t count_occupied(const StatusMap& statuses);

enum class StatusSource : std::uint8_t { Ssd, Bg, FusedWarning, FusedOcclusion };

/// Sources that describe the final per-space status (everything except the
/// BG audit stream).
bool is_final_source(StatusSource source);

struct OccupancyRecord {
  TimestampMs ts = 0;
  std::string node_id;
  std::string space_id;
  SpaceStatus status = SpaceStatus::Unknown;
  StatusSource source = StatusSource::Ssd;

  bool operator==(const OccupancyRecord&) const = default;
};

std::string_view to_string(SpaceStatus status);
std::string_view to_string(StatusSource source);
std::string_view to_string(DetectorKind kind);
SpaceStatus parse_status(std::string_view text);
StatusSource parse_source(std::string_view text);

}  // namespace parksense
