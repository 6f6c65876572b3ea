#pragma once

#include <optional>
#include <span>
#include <vector>

#include "parksense/config.hpp"
#include "parksense/model.hpp"
#include "parksense/space_map.hpp"

namespace parksense {

struct MatchCandidate {
  std::size_t space = 0;
  std::size_t detection = 0;
  double v_score = 0.0;
};

struct SsdSnapshot {
  TimestampMs ts = 0;
  StatusMap status;
  std::vector<std::optional<std::size_t>> winner;  // per space: detection index
  std::vector<Detection> detections;
};

/// iou(space, detection) * sqrt(score). Rejects BG and non-vehicle detections
/// with ErrorKind::Kind.
double match_score(const ParkingSpace& space, const Detection& det);

/// SSD detections with a vehicle label, in input order.
std::vector<Detection> vehicle_detections(std::span<const Detection> detections);

/// Snapshot occupancy with double thresholding against `prev`.
///
/// A pair is valid when its score reaches th_min for a space previously
/// Occupied, th_max otherwise. Each detection then keeps only its best valid
/// space (ties: lower rect center in the image, then smaller space_id); any
/// space left with a pair is Occupied, the rest Vacant.
///
/// `prev` may be entirely Unknown (first frame). A mix of Unknown and known
/// statuses is a state error; a size mismatch is a map error.
SsdSnapshot resolve_snapshot(std::span<const ParkingSpace> spaces, std::span<const Detection> detections,
                             const StatusMap& prev, const PipelineConfig& cfg, TimestampMs ts = 0);

}  // namespace parksense
