#include "parksense/server.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include <fmt/format.h>

#include "parksense/error.hpp"

namespace parksense {

NodePipeline::NodePipeline(NodeLayout layout, const PipelineConfig& cfg)
    : layout_(std::move(layout)),
      cfg_(cfg),
      tracker_(TrackerParams::from(cfg)),
      ssd_prev_(layout_.size(), SpaceStatus::Unknown),
      final_(layout_.size()),
      emitted_(layout_.size()),
      ssd_emitted_(layout_.size(), SpaceStatus::Unknown) {}

IngestResult NodePipeline::ingest(const FrameMessage& msg) {
  if (msg.node_id != layout_.node_id) {
    throw Error(ErrorKind::Routing, fmt::format("message for '{}' sent to pipeline '{}'", msg.node_id, layout_.node_id));
  }
  IngestResult out;
  auto drop = [&](TimestampMs last) {
    out.accepted = false;
    out.diagnostic = fmt::format("node {}: dropped {} frame {} at ts {} (last processed ts {})", msg.node_id,
                                 to_string(msg.kind), msg.frame_seq, msg.ts, last);
    return out;
  };
  if (last_ts_ && msg.ts < *last_ts_) return drop(*last_ts_);
  const auto& last_kind = msg.kind == DetectorKind::Ssd ? last_ssd_ts_ : last_bg_ts_;
  if (last_kind && msg.ts <= *last_kind) return drop(*last_kind);

  if (msg.kind == DetectorKind::Ssd) {
    on_ssd(msg, out);
    last_ssd_ts_ = msg.ts;
  } else {
    on_bg(msg, out);
    last_bg_ts_ = msg.ts;
  }
  last_ts_ = msg.ts;
  return out;
}

void NodePipeline::on_ssd(const FrameMessage& msg, IngestResult& out) {
  const auto ts = msg.ts;
  const auto dets = vehicle_detections(msg.detections);
  auto snap = resolve_snapshot(layout_.spaces, dets, ssd_prev_, cfg_, ts);
  const auto ssd_count = static_cast<long>(count_occupied(snap.status));

  if (!bootstrapped_) {
    bg_.bootstrap(snap.status);
    fusion_.ssd_prev_count = ssd_count;
    fusion_.last_step_ts = ts;
    next_step_ts_ = ts + cfg_.fusion_step_ms();
    next_sample_ts_ = ts;
    bootstrapped_ = true;
  }

  const auto bg_now = bg_.current();
  const auto bg_count = static_cast<long>(count_occupied(bg_now));
  while (ts >= next_step_ts_) {
    const auto before = fusion_.mode;
    const double metric = before == FusionMode::Normal ? lighting_metric(ssd_count, bg_count, fusion_.ssd_prev_count)
                                                       : safe_ratio(ssd_count, bg_count);
    fusion_ = update_mode(fusion_, ssd_count, bg_count, cfg_, next_step_ts_);
    if (fusion_.mode != before) transitions_.push_back({next_step_ts_, fusion_.mode, metric});
    next_step_ts_ += cfg_.fusion_step_ms();
  }

  latch_occlusions(snap);
  ssd_prev_ = std::move(snap.status);
  final_ = fuse(ssd_prev_, bg_now, fusion_, occlusions_);
  emit(ts, out);
}

void NodePipeline::latch_occlusions(const SsdSnapshot& snap) {
  auto fresh = detect_occlusions(snap, layout_, cfg_);
  std::vector<TimestampMs> seen(fresh.size(), snap.ts);
  const auto hold = static_cast<TimestampMs>(std::llround(cfg_.occlusion_hold_s * 1000.0));
  auto uses = [&](std::size_t space) {
    return std::any_of(fresh.begin(), fresh.end(),
                       [&](const OcclusionFlag& f) { return f.host == space || f.occluded == space; });
  };
  // A flag whose vehicle went undetected survives for a while, unless some
  // other detection now explains its host space.
  for (std::size_t k = 0; k < occlusions_.size(); ++k) {
    const auto& old = occlusions_[k];
    if (snap.ts - occlusion_seen_[k] > hold) continue;
    if (snap.winner[old.host] || uses(old.host) || uses(old.occluded)) continue;
    fresh.push_back(old);
    seen.push_back(occlusion_seen_[k]);
  }
  occlusions_ = std::move(fresh);
  occlusion_seen_ = std::move(seen);
}

void NodePipeline::emit(TimestampMs ts, IngestResult& out) {
  const bool sample = ts >= next_sample_ts_;
  if (sample) {
    const auto step = cfg_.log_sample_ms();
    next_sample_ts_ += ((ts - next_sample_ts_) / step + 1) * step;
  }
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    const auto& id = layout_.spaces[i].space_id;
    if (sample || final_[i] != emitted_[i]) {
      out.records.push_back({ts, layout_.node_id, id, final_[i].status, final_[i].source});
      emitted_[i] = final_[i];
    }
    if (sample || ssd_prev_[i] != ssd_emitted_[i]) {
      ssd_only_.push_back({ts, layout_.node_id, id, ssd_prev_[i], StatusSource::Ssd});
      ssd_emitted_[i] = ssd_prev_[i];
    }
  }
}

void NodePipeline::on_bg(const FrameMessage& msg, IngestResult& out) {
  auto events = tracker_.step(msg.detections, msg.ts);
  if (!bootstrapped_) {
    if (keep_track_events_) track_events_.insert(track_events_.end(), events.begin(), events.end());
    return;
  }
  const auto before = bg_.current();
  for (const auto& e : events) {
    if (e.type == TrackEventType::Retire) bg_.apply_track(e.track, layout_, cfg_);
  }
  if (keep_track_events_) {
    track_events_.insert(track_events_.end(), std::make_move_iterator(events.begin()),
                         std::make_move_iterator(events.end()));
  }
  const auto after = bg_.current();
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    if (after[i] != before[i]) {
      out.records.push_back({msg.ts, layout_.node_id, layout_.spaces[i].space_id, after[i], StatusSource::Bg});
    }
  }
}

Server::Server(const SpaceMap& spaces, const PipelineConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  for (const auto& id : spaces.node_ids()) pipelines_.emplace(id, NodePipeline(spaces.layout(id), cfg_));
}

NodePipeline& Server::pipeline(std::string_view node_id) {
  auto it = pipelines_.find(node_id);
  if (it == pipelines_.end()) {
    throw Error(ErrorKind::Routing, fmt::format("node '{}' is not in the space map", node_id));
  }
  return it->second;
}

const std::vector<OccupancyRecord>& Server::ingest(const WireMessage& msg, std::size_t encoded_bytes) {
  auto& p = pipeline(node_of(msg));
  ledger_.record(msg, encoded_bytes);
  last_.clear();
  if (const auto* frame = std::get_if<FrameMessage>(&msg)) {
    auto result = p.ingest(*frame);
    if (!result.accepted) diagnostics_.push_back(std::move(result.diagnostic));
    last_ = std::move(result.records);
    log_.insert(log_.end(), last_.begin(), last_.end());
  }
  return last_;
}

namespace {

// Per-node SSD-only streams merged by time, nodes in name order on ties.
std::vector<OccupancyRecord> merge_ssd_only(const std::map<std::string, NodePipeline, std::less<>>& pipelines) {
  std::vector<OccupancyRecord> out;
  for (const auto& [id, p] : pipelines) out.insert(out.end(), p.ssd_only_records().begin(), p.ssd_only_records().end());
  std::stable_sort(out.begin(), out.end(), [](const OccupancyRecord& a, const OccupancyRecord& b) { return a.ts < b.ts; });
  return out;
}

}  // namespace

std::vector<OccupancyRecord> Server::ssd_only_log() const { return merge_ssd_only(pipelines_); }

ReplayResult replay_serial(std::string_view bytes, const SpaceMap& spaces, const PipelineConfig& cfg, DecodeMode mode) {
  Server server(spaces, cfg);
  ReplayResult r;
  WireReader reader(bytes, mode);
  while (auto msg = reader.next()) {
    server.ingest(*msg, reader.last_message_bytes());
    ++r.messages;
    if (const auto* f = std::get_if<FrameMessage>(&*msg)) r.detection_records += f->detections.size();
  }
  r.truncated = reader.truncated();
  r.log = server.log();
  r.ssd_only_log = server.ssd_only_log();
  r.ledger = server.ledger();
  r.diagnostics = server.diagnostics();
  for (const auto& [id, p] : server.pipelines()) r.transitions[id] = p.mode_transitions();
  return r;
}

ReplayResult replay_parallel(std::string_view bytes, const SpaceMap& spaces, const PipelineConfig& cfg,
                             DecodeMode mode) {
  cfg.validate();
  ReplayResult r;
  auto node_ids = spaces.node_ids();
  std::sort(node_ids.begin(), node_ids.end());
  std::map<std::string, std::size_t, std::less<>> slot;
  for (std::size_t k = 0; k < node_ids.size(); ++k) slot.emplace(node_ids[k], k);

  struct Indexed {
    std::size_t index;
    FrameMessage frame;
  };
  std::vector<std::vector<Indexed>> work(node_ids.size());
  WireReader reader(bytes, mode);
  std::size_t index = 0;
  while (auto msg = reader.next()) {
    auto it = slot.find(node_of(*msg));
    if (it == slot.end()) {
      throw Error(ErrorKind::Routing, fmt::format("node '{}' is not in the space map", node_of(*msg)));
    }
    r.ledger.record(*msg, reader.last_message_bytes());
    ++r.messages;
    if (auto* f = std::get_if<FrameMessage>(&*msg)) {
      r.detection_records += f->detections.size();
      work[it->second].push_back({index, std::move(*f)});
    }
    ++index;
  }
  r.truncated = reader.truncated();

  struct Out {
    std::vector<std::pair<std::size_t, OccupancyRecord>> records;
    std::vector<std::pair<std::size_t, std::string>> diagnostics;
    std::vector<OccupancyRecord> ssd_only;
    std::vector<ModeTransition> transitions;
    std::exception_ptr error;
    std::size_t error_index = 0;
  };
  std::vector<Out> outs(node_ids.size());
  const auto n = static_cast<std::int64_t>(node_ids.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t k = 0; k < n; ++k) {
    auto& o = outs[static_cast<std::size_t>(k)];
    NodePipeline pipeline(spaces.layout(node_ids[static_cast<std::size_t>(k)]), cfg);
    std::size_t current = 0;
    try {
      for (const auto& m : work[static_cast<std::size_t>(k)]) {
        current = m.index;
        auto res = pipeline.ingest(m.frame);
        if (!res.accepted) o.diagnostics.emplace_back(m.index, std::move(res.diagnostic));
        for (auto& rec : res.records) o.records.emplace_back(m.index, std::move(rec));
      }
    } catch (...) {
      o.error = std::current_exception();
      o.error_index = current;
    }
    o.ssd_only = pipeline.ssd_only_records();
    o.transitions = pipeline.mode_transitions();
  }

  const Out* first_error = nullptr;
  for (const auto& o : outs) {
    if (o.error && (!first_error || o.error_index < first_error->error_index)) first_error = &o;
  }
  if (first_error) std::rethrow_exception(first_error->error);

  // Each message index belongs to one node, so a k-way merge on the index
  // restores stream order.
  auto merge = [&](auto member, auto& dest) {
    std::vector<std::size_t> pos(outs.size(), 0);
    while (true) {
      std::size_t best = outs.size();
      for (std::size_t k = 0; k < outs.size(); ++k) {
        const auto& v = outs[k].*member;
        if (pos[k] < v.size() && (best == outs.size() || v[pos[k]].first < (outs[best].*member)[pos[best]].first)) {
          best = k;
        }
      }
      if (best == outs.size()) break;
      auto& v = outs[best].*member;
      const auto idx = v[pos[best]].first;
      while (pos[best] < v.size() && v[pos[best]].first == idx) dest.push_back(std::move(v[pos[best]++].second));
    }
  };
  merge(&Out::records, r.log);
  merge(&Out::diagnostics, r.diagnostics);

  for (std::size_t k = 0; k < outs.size(); ++k) {
    r.ssd_only_log.insert(r.ssd_only_log.end(), outs[k].ssd_only.begin(), outs[k].ssd_only.end());
    r.transitions[node_ids[k]] = std::move(outs[k].transitions);
  }
  std::stable_sort(r.ssd_only_log.begin(), r.ssd_only_log.end(),
                   [](const OccupancyRecord& a, const OccupancyRecord& b) { return a.ts < b.ts; });
  return r;
}

std::string volume_csv(const VolumeLedger& ledger, const PipelineConfig& cfg) {
  const VolumeParams params{cfg.raw_fps, cfg.raw_frame_kb, cfg.nominal_detection_kb_per_min};
  std::string out =
      "node_id,elapsed_s,detection_records,detection_bytes,snapshot_count,snapshot_bytes,snapshot_nominal_kb,"
      "actual_kb,raw_equivalent_kb,ratio,nominal_kb\n";
  auto it = std::back_inserter(out);
  for (const auto& [id, e] : ledger.entries()) {
    TimestampMs span = e.first_ts && e.last_ts ? *e.last_ts - *e.first_ts : 0;
    const double elapsed = std::max<double>(1.0, std::ceil(static_cast<double>(span) / 1000.0));
    const auto rep = volume_report(e, elapsed, params);
    fmt::format_to(it, "{},{},{},{},{},{},{},{:.3f},{:.0f},{:.2f},{:.0f}\n", id, elapsed, e.detection_records,
                   e.detection_bytes, e.snapshot_count, e.snapshot_bytes, e.snapshot_nominal_kb, rep.actual_kb,
                   rep.raw_equivalent_kb, rep.ratio, rep.nominal_kb);
  }
  return out;
}

}  // namespace parksense
