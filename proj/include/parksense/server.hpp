#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parksense/config.hpp"
#include "parksense/fusion.hpp"
#include "parksense/occupancy_bg.hpp"
#include "parksense/occupancy_ssd.hpp"
#include "parksense/space_map.hpp"
#include "parksense/tracker.hpp"
#include "parksense/wire.hpp"

namespace parksense {

struct ModeTransition {
  TimestampMs ts = 0;
  FusionMode mode = FusionMode::Normal;
  double metric = 0.0;  // r_t entering Warning, ssd/bg leaving it
};

struct IngestResult {
  bool accepted = true;
  std::string diagnostic;
  std::vector<OccupancyRecord> records;  // final and BG audit records, in emission order
};

/// Per-node server pipeline: SSD snapshot path, BG tracking path, fusion.
class NodePipeline {
 public:
  NodePipeline(NodeLayout layout, const PipelineConfig& cfg);

  /// Messages must arrive in non-decreasing ts with ts strictly increasing per
  /// detector kind; anything else is dropped and reported in the result.
  IngestResult ingest(const FrameMessage& msg);

  bool bootstrapped() const { return bootstrapped_; }
  const NodeLayout& layout() const { return layout_; }
  const FusionState& fusion_state() const { return fusion_; }
  const std::vector<ModeTransition>& mode_transitions() const { return transitions_; }
  const StatusMap& ssd_status() const { return ssd_prev_; }
  const BgOccupancy& bg() const { return bg_; }
  const Tracker& tracker() const { return tracker_; }
  const std::vector<FusedStatus>& final_status() const { return final_; }
  const std::vector<OcclusionFlag>& last_occlusions() const { return occlusions_; }
  /// SSD-only statuses emitted with the same cadence as the final stream.
  const std::vector<OccupancyRecord>& ssd_only_records() const { return ssd_only_; }
  const std::vector<TrackEvent>& track_events() const { return track_events_; }
  void keep_track_events(bool keep) { keep_track_events_ = keep; }

 private:
  void on_ssd(const FrameMessage& msg, IngestResult& out);
  void on_bg(const FrameMessage& msg, IngestResult& out);
  void latch_occlusions(const SsdSnapshot& snap);
  void emit(TimestampMs ts, IngestResult& out);

  NodeLayout layout_;
  PipelineConfig cfg_;
  Tracker tracker_;
  BgOccupancy bg_;
  FusionState fusion_;
  StatusMap ssd_prev_;
  std::vector<FusedStatus> final_;
  std::vector<FusedStatus> emitted_;
  StatusMap ssd_emitted_;
  std::vector<OcclusionFlag> occlusions_;
  std::vector<TimestampMs> occlusion_seen_;
  std::vector<ModeTransition> transitions_;
  std::vector<OccupancyRecord> ssd_only_;
  std::vector<TrackEvent> track_events_;
  bool keep_track_events_ = false;
  bool bootstrapped_ = false;
  TimestampMs next_step_ts_ = 0;
  TimestampMs next_sample_ts_ = 0;
  std::optional<TimestampMs> last_ts_;
  std::optional<TimestampMs> last_ssd_ts_;
  std::optional<TimestampMs> last_bg_ts_;
};

/// Routes messages to per-node pipelines, keeps the occupancy log and the
/// transmitted-volume ledger.
class Server {
 public:
  Server(const SpaceMap& spaces, const PipelineConfig& cfg);

  /// Throws ErrorKind::Routing for a node absent from the space map.
  /// Out-of-order frames are dropped and logged in diagnostics().
  const std::vector<OccupancyRecord>& ingest(const WireMessage& msg, std::size_t encoded_bytes = 0);

  const std::vector<OccupancyRecord>& log() const { return log_; }
  std::vector<OccupancyRecord> ssd_only_log() const;
  const VolumeLedger& ledger() const { return ledger_; }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }
  NodePipeline& pipeline(std::string_view node_id);
  const std::map<std::string, NodePipeline, std::less<>>& pipelines() const { return pipelines_; }

 private:
  friend struct ReplayAccess;
  PipelineConfig cfg_;
  std::map<std::string, NodePipeline, std::less<>> pipelines_;
  std::vector<OccupancyRecord> log_;
  std::vector<OccupancyRecord> last_;
  VolumeLedger ledger_;
  std::vector<std::string> diagnostics_;
};

struct ReplayResult {
  std::vector<OccupancyRecord> log;
  std::vector<OccupancyRecord> ssd_only_log;
  VolumeLedger ledger;
  std::vector<std::string> diagnostics;
  std::map<std::string, std::vector<ModeTransition>> transitions;
  std::uint64_t messages = 0;
  std::uint64_t detection_records = 0;
  bool truncated = false;
};

/// Decode and ingest a whole wire log on one thread, message by message.
ReplayResult replay_serial(std::string_view bytes, const SpaceMap& spaces, const PipelineConfig& cfg,
                           DecodeMode mode = DecodeMode::Strict);

/// Same result as replay_serial; node pipelines run concurrently (OpenMP)
/// and their records are merged back into stream order.
ReplayResult replay_parallel(std::string_view bytes, const SpaceMap& spaces, const PipelineConfig& cfg,
                             DecodeMode mode = DecodeMode::Strict);

std::string volume_csv(const VolumeLedger& ledger, const PipelineConfig& cfg);

}  // namespace parksense
