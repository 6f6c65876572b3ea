#include "parksense/occupancy_ssd.hpp"

#include <algorithm>
#include <cmath>

#include "parksense/error.hpp"

namespace parksense {

double match_score(const ParkingSpace& space, const Detection& det) {
  if (det.kind != DetectorKind::Ssd) throw Error(ErrorKind::Kind, "match_score: BG detections carry no class");
  if (!is_vehicle(det.class_label)) {
    throw Error(ErrorKind::Kind, "match_score: '" + det.class_label + "' is not a vehicle class");
  }
  if (!(det.score >= 0.0 && det.score <= 1.0)) throw Error(ErrorKind::Domain, "match_score: score outside [0,1]");
  return iou(space.rect, det.bbox) * std::sqrt(det.score);
}

std::vector<Detection> vehicle_detections(std::span<const Detection> detections) {
  std::vector<Detection> out;
  for (const auto& d : detections) {
    if (d.kind == DetectorKind::Ssd && is_vehicle(d.class_label)) out.push_back(d);
  }
  return out;
}

SsdSnapshot resolve_snapshot(std::span<const ParkingSpace> spaces, std::span<const Detection> detections,
                             const StatusMap& prev, const PipelineConfig& cfg, TimestampMs ts) {
  if (prev.size() != spaces.size()) throw Error(ErrorKind::Map, "resolve_snapshot: prev does not cover the spaces");
  const auto unknown = static_cast<std::size_t>(std::count(prev.begin(), prev.end(), SpaceStatus::Unknown));
  if (unknown != 0 && unknown != prev.size()) {
    throw Error(ErrorKind::State, "resolve_snapshot: Unknown status after bootstrap");
  }

  SsdSnapshot snap;
  snap.ts = ts;
  snap.status.assign(spaces.size(), SpaceStatus::Vacant);
  snap.winner.assign(spaces.size(), std::nullopt);
  snap.detections.assign(detections.begin(), detections.end());

  // Case 1: every detection claims at most one space, its best valid pair.
  std::vector<double> winner_score(spaces.size(), -1.0);
  for (std::size_t j = 0; j < detections.size(); ++j) {
    std::optional<MatchCandidate> best;
    for (std::size_t i = 0; i < spaces.size(); ++i) {
      const double v = match_score(spaces[i], detections[j]);
      const double threshold = prev[i] == SpaceStatus::Occupied ? cfg.th_min : cfg.th_max;
      if (v < threshold || v <= 0.0) continue;
      bool better = !best || v > best->v_score;
      if (best && v == best->v_score) {
        const double yi = spaces[i].rect.center().y;
        const double yb = spaces[best->space].rect.center().y;
        better = yi > yb || (yi == yb && spaces[i].space_id < spaces[best->space].space_id);
      }
      if (better) best = MatchCandidate{i, j, v};
    }
    if (!best) continue;
    // Case 2: a space keeping any pair is occupied.
    const auto i = best->space;
    snap.status[i] = SpaceStatus::Occupied;
    if (best->v_score > winner_score[i]) {
      winner_score[i] = best->v_score;
      snap.winner[i] = j;
    }
  }
  return snap;
}

}  // namespace parksense
