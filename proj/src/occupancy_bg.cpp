#include "parksense/occupancy_bg.hpp"

#include "parksense/error.hpp"

namespace parksense {

void BgOccupancy::bootstrap(const StatusMap& initial) {
  if (bootstrapped_) throw Error(ErrorKind::State, "BG occupancy already bootstrapped");
  for (auto s : initial) {
    if (s == SpaceStatus::Unknown) throw Error(ErrorKind::Map, "bootstrap: every space needs a known status");
  }
  status_ = initial;
  last_event_ts_.assign(initial.size(), std::numeric_limits<TimestampMs>::min());
  bootstrapped_ = true;
}

std::vector<std::size_t> BgOccupancy::apply_track(const Track& track, const NodeLayout& layout,
                                                  const PipelineConfig& cfg) {
  if (!bootstrapped_) throw Error(ErrorKind::State, "apply_track before bootstrap");
  if (layout.size() != status_.size()) throw Error(ErrorKind::Map, "apply_track: layout does not match status map");
  if (track.lifecycle != Lifecycle::Retired) throw Error(ErrorKind::State, "apply_track expects a retired track");

  std::vector<std::size_t> changed;
  if (track.tracked_duration_ms() < cfg.t_track_ms()) return changed;

  const auto start = locate_space(layout, track.first_bbox.center());
  const auto end = locate_space(layout, track.last_bbox.center());
  if (start == end) return changed;  // same space, or outside throughout

  auto set = [&](std::size_t i, SpaceStatus s) {
    if (track.retired_ts < last_event_ts_[i]) return;
    last_event_ts_[i] = track.retired_ts;
    if (status_[i] != s) {
      status_[i] = s;
      changed.push_back(i);
    }
  };
  if (start) set(*start, SpaceStatus::Vacant);
  if (end) set(*end, SpaceStatus::Occupied);
  return changed;
}

StatusMap BgOccupancy::current() const {
  if (!bootstrapped_) throw Error(ErrorKind::State, "BG occupancy read before bootstrap");
  return status_;
}

}  // namespace parksense
