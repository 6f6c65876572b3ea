#include "parksense/tracker.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "parksense/assignment.hpp"
#include "parksense/error.hpp"

namespace parksense {

TrackerParams TrackerParams::from(const PipelineConfig& cfg) {
  TrackerParams p;
  p.max_age_frames = cfg.max_age_frames;
  p.min_hits = cfg.min_hits;
  p.min_assoc_iou = cfg.min_assoc_iou;
  p.iou_track = cfg.iou_track;
  p.reid_window_ms = cfg.reid_window_ms();
  p.reid_enabled = cfg.reid_enabled;
  return p;
}

void RetiredArchive::insert(Track track) {
  // Kept sorted by retirement time; retirements normally arrive in order.
  auto pos = std::upper_bound(entries_.begin(), entries_.end(), track.retired_ts,
                              [](TimestampMs ts, const Track& t) { return ts < t.retired_ts; });
  entries_.insert(pos, std::move(track));
}

void RetiredArchive::prune(TimestampMs now, TimestampMs window_ms) {
  while (!entries_.empty() && now - entries_.front().retired_ts > window_ms) entries_.pop_front();
}

std::optional<RetiredArchive::Match> RetiredArchive::find(const BoundingBox& first_bbox, TimestampMs now,
                                                          TimestampMs window_ms, double min_iou) const {
  std::optional<Match> best;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& old = entries_[i];
    if (now - old.retired_ts > window_ms || old.retired_ts > now) continue;
    const double overlap = iou(old.last_bbox, first_bbox);
    if (overlap < min_iou) continue;
    if (!best || overlap > best->iou ||
        (overlap == best->iou && old.retired_ts >= entries_[best->index].retired_ts)) {
      best = Match{i, overlap};
    }
  }
  return best;
}

Track RetiredArchive::take(std::size_t index) {
  Track t = std::move(entries_.at(index));
  entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(index));
  return t;
}

Tracker::Tracker(TrackerParams params) : params_(params) {}

std::optional<std::uint64_t> Tracker::reidentify(Track& track, TimestampMs now) {
  auto match = archive_.find(track.first_bbox, now, params_.reid_window_ms, params_.iou_track);
  if (!match) return std::nullopt;
  Track old = archive_.take(match->index);
  const auto replaced = track.track_id;
  track.track_id = old.track_id;
  track.first_ts = old.first_ts;
  track.first_bbox = old.first_bbox;
  track.hits += old.hits;
  old.history.insert(old.history.end(), track.history.begin(), track.history.end());
  track.history = std::move(old.history);
  return replaced;
}

void Tracker::promote(Track& track, TimestampMs ts, std::vector<TrackEvent>& events) {
  track.lifecycle = Lifecycle::Active;
  if (!params_.reid_enabled) return;
  if (auto replaced = reidentify(track, ts)) {
    events.push_back(TrackEvent{TrackEventType::Merge, ts, track, replaced});
  }
}

std::vector<TrackEvent> Tracker::step(std::span<const Detection> detections, TimestampMs ts) {
  if (last_ts_ && ts <= *last_ts_) {
    throw Error(ErrorKind::Ordering, fmt::format("tracker step at {} does not advance past {}", ts, *last_ts_));
  }
  for (const auto& d : detections) {
    if (d.kind != DetectorKind::Bg) throw Error(ErrorKind::Kind, "tracker accepts BG detections only");
    if (!d.bbox.has_area()) throw Error(ErrorKind::InvalidGeometry, "tracker: degenerate detection box");
  }
  last_ts_ = ts;
  ++frames_;
  std::vector<TrackEvent> events;

  std::vector<std::optional<BoundingBox>> predicted;
  predicted.reserve(tracks_.size());
  for (auto& t : tracks_) predicted.push_back(t.filter->predict());

  CostMatrix cost(tracks_.size(), detections.size(), kForbidden);
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    if (!predicted[i]) continue;
    for (std::size_t j = 0; j < detections.size(); ++j) {
      const double overlap = iou(*predicted[i], detections[j].bbox);
      if (overlap >= params_.min_assoc_iou && overlap > 0.0) cost(i, j) = 1.0 - overlap;
    }
  }
  const auto assignment = solve_assignment(cost);

  std::vector<char> det_used(detections.size(), 0);
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    auto& t = tracks_[i];
    const int j = assignment.row_to_col[i];
    if (j < 0) {
      ++t.time_since_update;
      t.hit_streak = 0;
      continue;
    }
    const auto& det = detections[static_cast<std::size_t>(j)];
    det_used[static_cast<std::size_t>(j)] = 1;
    t.filter->update(det.bbox);
    t.last_bbox = det.bbox;
    t.last_ts = ts;
    t.time_since_update = 0;
    ++t.hits;
    ++t.hit_streak;
    t.history.push_back({ts, det.bbox});
    if (t.lifecycle == Lifecycle::Tentative && t.hit_streak >= params_.min_hits) promote(t, ts, events);
    if (params_.emit_updates) events.push_back(TrackEvent{TrackEventType::Update, ts, t, std::nullopt});
  }

  for (std::size_t j = 0; j < detections.size(); ++j) {
    if (det_used[j]) continue;
    Track t;
    t.track_id = next_id_++;
    t.first_bbox = t.last_bbox = detections[j].bbox;
    t.first_ts = t.last_ts = ts;
    t.hits = t.hit_streak = 1;
    t.history.push_back({ts, detections[j].bbox});
    t.filter.emplace(detections[j].bbox);
    events.push_back(TrackEvent{TrackEventType::Spawn, ts, t, std::nullopt});
    if (params_.min_hits <= 1) promote(t, ts, events);
    tracks_.push_back(std::move(t));
  }

  std::vector<Track> alive;
  alive.reserve(tracks_.size());
  for (auto& t : tracks_) {
    if (t.time_since_update <= params_.max_age_frames) {
      alive.push_back(std::move(t));
      continue;
    }
    if (t.lifecycle != Lifecycle::Active) continue;  // never confirmed: dropped silently
    t.lifecycle = Lifecycle::Retired;
    t.retired_ts = ts;
    events.push_back(TrackEvent{TrackEventType::Retire, ts, t, std::nullopt});
    archive_.insert(std::move(t));
  }
  tracks_ = std::move(alive);
  archive_.prune(ts, params_.reid_window_ms);
  return events;
}

std::string_view to_string(TrackEventType type) {
  switch (type) {
    case TrackEventType::Spawn: return "spawn";
    case TrackEventType::Update: return "update";
    case TrackEventType::Retire: return "retire";
    case TrackEventType::Merge: return "merge";
  }
  return "spawn";
}

void write_track_event_csv(std::ostream& out, const std::string& node_id, const TrackEvent& event) {
  const auto& b = event.type == TrackEventType::Spawn ? event.track.first_bbox : event.track.last_bbox;
  out << fmt::format("{},{},{},{},{},{},{},{}\n", event.ts, node_id, event.track.track_id, to_string(event.type),
                     b.x1, b.y1, b.x2, b.y2);
}

}  // namespace parksense
