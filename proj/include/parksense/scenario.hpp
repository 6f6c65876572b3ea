#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parksense/model.hpp"
#include "parksense/space_map.hpp"

namespace parksense {

struct VehicleSchedule {
  std::string vehicle_id;
  std::string vehicle_class;  // car | van | bus | truck
  double width = 0.0;
  double height = 0.0;
  TimestampMs arrive_ms = 0;
  std::string space_id;
  double pause_s = 0.0;
  TimestampMs park_ms = 0;
  std::optional<TimestampMs> depart_ms;

  bool operator==(const VehicleSchedule&) const = default;
};

struct LightingEvent {
  TimestampMs start_ms = 0;
  TimestampMs end_ms = 0;
  double recall_mult = 1.0;
  double score_mult = 1.0;

  bool active(TimestampMs ts) const { return ts >= start_ms && ts < end_ms; }
  bool operator==(const LightingEvent&) const = default;
};

/// One node's scripted world. File format (UTF-8 lines, `#` comments):
///   N,1,<node_id>,<img_w>,<img_h>,<duration_ms>,<seed>
///   V,<vehicle_id>,<class>,<w>,<h>,<arrive_ms>,<space_id>,<pause_s>,<park_ms>,<depart_ms|->
///   L,<start_ms>,<end_ms>,<recall_mult>,<score_mult>
struct Scenario {
  std::string node_id;
  int img_w = 1280;
  int img_h = 720;
  TimestampMs duration_ms = 0;
  std::uint64_t seed = 0;
  std::vector<VehicleSchedule> vehicles;
  std::vector<LightingEvent> lighting;

  static Scenario parse(std::string_view text, const std::string& source_name = "<memory>");
  static Scenario load(const std::filesystem::path& path);
  std::string to_text() const;

  /// Checks schedule ordering, space references and image fit against the
  /// node's layout. Throws ErrorKind::Map / ErrorKind::Range.
  void validate(const NodeLayout& layout) const;

  /// Product of multipliers of the lighting events active at `ts`.
  double recall_multiplier(TimestampMs ts) const;
  double score_multiplier(TimestampMs ts) const;
  bool lighting_active(TimestampMs ts) const;

  bool operator==(const Scenario&) const = default;
};

}  // namespace parksense
