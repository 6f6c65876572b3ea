#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "parksense/config.hpp"
#include "parksense/scenario.hpp"
#include "parksense/space_map.hpp"

namespace parksense {

struct VehicleShape {
  std::string vehicle_class = "car";
  double width = 96.0;
  double height = 80.0;
};

/// Randomized but serialized traffic: at most one vehicle maneuvers at a time
/// on a node, and consecutive maneuvers are separated by `maneuver_gap_s`.
struct BuilderOptions {
  TimestampMs duration_ms = 3'600'000;
  std::uint64_t seed = 1;
  int img_w = 1280;
  int img_h = 720;
  /// Arrivals per hour, indexed by hour of day (cycled).
  std::vector<double> arrivals_per_hour = std::vector<double>(24, 6.0);
  double initial_occupancy = 0.5;
  double dwell_min_s = 1200.0;
  double dwell_max_s = 10800.0;
  double speed_min_px_s = 25.0;
  double speed_max_px_s = 45.0;
  double min_move_s = 12.0;
  double pause_probability = 0.4;
  double pause_min_s = 2.5;
  double pause_max_s = 6.0;
  double maneuver_gap_s = 12.0;
  std::vector<VehicleShape> shapes = {VehicleShape{}};
  std::vector<LightingEvent> lighting;
  /// Spaces the generator leaves alone (reserved for scripted vehicles).
  std::vector<std::string> reserved_spaces;
  /// [start, end) intervals in which no generated vehicle moves.
  std::vector<std::pair<TimestampMs, TimestampMs>> quiet;
};

Scenario build_scenario(const std::string& node_id, const NodeLayout& layout, const EmulatorParams& params,
                        const BuilderOptions& options);

/// Typical weekday demand curve, quiet overnight and busy in daytime.
std::vector<double> weekday_profile(double peak_per_hour);

}  // namespace parksense
