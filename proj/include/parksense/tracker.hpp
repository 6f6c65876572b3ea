#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "parksense/config.hpp"
#include "parksense/kalman.hpp"
#include "parksense/model.hpp"

namespace parksense {

enum class Lifecycle { Tentative, Active, Retired };

struct TimedBox {
  TimestampMs ts = 0;
  BoundingBox bbox;
};

struct Track {
  std::uint64_t track_id = 0;
  BoundingBox first_bbox;
  BoundingBox last_bbox;
  TimestampMs first_ts = 0;
  TimestampMs last_ts = 0;
  TimestampMs retired_ts = 0;  // meaningful once Retired
  int hits = 0;
  int hit_streak = 0;
  int time_since_update = 0;  // frames
  Lifecycle lifecycle = Lifecycle::Tentative;
  std::vector<TimedBox> history;
  std::optional<BoxKalman> filter;

  TimestampMs tracked_duration_ms() const { return last_ts - first_ts; }
};

enum class TrackEventType { Spawn, Update, Retire, Merge };

struct TrackEvent {
  TrackEventType type = TrackEventType::Spawn;
  TimestampMs ts = 0;
  Track track;                        // state after the event
  std::optional<std::uint64_t> from;  // Merge: the provisional id that was replaced
};

struct TrackerParams {
  int max_age_frames = 5;
  int min_hits = 3;
  double min_assoc_iou = 0.3;
  double iou_track = 0.6;
  TimestampMs reid_window_ms = 8000;
  bool reid_enabled = true;
  bool emit_updates = false;

  static TrackerParams from(const PipelineConfig& cfg);
};

/// Recently retired tracks, oldest first. Entries older than the look-back
/// window are dropped by prune().
class RetiredArchive {
 public:
  struct Match {
    std::size_t index;
    double iou;
  };

  void insert(Track track);
  void prune(TimestampMs now, TimestampMs window_ms);
  /// Best archived track for a newly promoted one: highest IoU between the
  /// archived last box and `first_bbox`, then most recent retirement.
  std::optional<Match> find(const BoundingBox& first_bbox, TimestampMs now, TimestampMs window_ms,
                            double min_iou) const;
  Track take(std::size_t index);

  const std::deque<Track>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::deque<Track> entries_;
};

/// Modified SORT over BG detections for a single node.
class Tracker {
 public:
  explicit Tracker(TrackerParams params = {});

  /// One frame. Throws ErrorKind::Ordering when `ts` does not advance and
  /// ErrorKind::Kind for non-BG detections.
  std::vector<TrackEvent> step(std::span<const Detection> detections, TimestampMs ts);

  /// Merge a just-promoted track with a matching archived one. On success the
  /// track adopts the archived id, start time and start box, histories are
  /// concatenated and the archived entry is removed. Returns the id that was
  /// replaced.
  std::optional<std::uint64_t> reidentify(Track& track, TimestampMs now);

  const std::vector<Track>& tracks() const { return tracks_; }
  const RetiredArchive& archive() const { return archive_; }
  RetiredArchive& archive() { return archive_; }
  const TrackerParams& params() const { return params_; }
  std::uint64_t frames() const { return frames_; }

 private:
  void promote(Track& track, TimestampMs ts, std::vector<TrackEvent>& events);

  TrackerParams params_;
  std::vector<Track> tracks_;
  RetiredArchive archive_;
  std::uint64_t next_id_ = 1;
  std::uint64_t frames_ = 0;
  std::optional<TimestampMs> last_ts_;
};

std::string_view to_string(TrackEventType type);

/// Debug log row: ts,node_id,track_id,event,x1,y1,x2,y2
void write_track_event_csv(std::ostream& out, const std::string& node_id, const TrackEvent& event);

}  // namespace parksense
