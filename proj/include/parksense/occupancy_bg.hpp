#pragma once

#include <vector>

#include "parksense/config.hpp"
#include "parksense/space_map.hpp"
#include "parksense/tracker.hpp"

namespace parksense {

/// Per-space occupancy maintained from completed BG tracks.
class BgOccupancy {
 public:
  /// Seeds statuses (normally from the first SSD snapshot). Single-shot.
  void bootstrap(const StatusMap& initial);

  /// Applies the entry/exit rules for one retired track and returns the
  /// indices of spaces whose status changed. Tracks shorter than t_track_s
  /// change nothing; per space, an event older than the last applied one is
  /// ignored.
  std::vector<std::size_t> apply_track(const Track& track, const NodeLayout& layout, const PipelineConfig& cfg);

  StatusMap current() const;
  bool bootstrapped() const { return bootstrapped_; }

 private:
  bool bootstrapped_ = false;
  StatusMap status_;
  std::vector<TimestampMs> last_event_ts_;
};

}  // namespace parksense
