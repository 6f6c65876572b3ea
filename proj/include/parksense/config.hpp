#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace parksense {

/// Detector-emulator knobs. None of these come from field measurements; they
/// shape the synthetic SSD-like and BG-like streams.
struct EmulatorParams {
  std::int64_t ssd_period_ms = 1000;
  std::int64_t bg_period_ms = 200;
  std::int64_t bg_phase_ms = 100;  // BG frames at phase + k*period, so clocks never collide
  std::int64_t snapshot_phase_ms = 500;
  double ssd_recall_lo = 0.95;
  double ssd_recall_hi = 0.98;
  double ssd_jitter_px = 3.0;
  double ssd_score_lo = 0.60;
  double ssd_score_hi = 0.99;
  double ssd_fp_rate = 0.01;
  double ssd_min_visible = 0.5;
  double occlude_frac = 0.9;
  double bg_blob_margin_px = 4.0;
  double bg_merge_dist_px = 10.0;
  double bg_noise_rate = 0.01;
  double bg_min_visible = 0.25;
  double aisle_offset_px = 70.0;
  double motion_eps_px = 0.5;
};

/// Every tunable of the pipeline. Defaults reproduce the reference parameter
/// table; tracker and emulator values are local choices.
struct PipelineConfig {
  // SSD matching
  double th_max = 0.25;
  double th_min = 0.10;
  // modified SORT
  double iou_track = 0.60;
  double t_track_s = 8.0;
  double reid_window_s = 8.0;
  bool reid_enabled = true;
  int max_age_frames = 5;
  int min_hits = 3;
  double min_assoc_iou = 0.3;
  // fusion
  double r_warn = 0.8;
  double r_reactivate = 0.7;
  double occ_pct = 0.90;
  // an occlusion flag survives SSD frames that miss the occluding vehicle
  double occlusion_hold_s = 10.0;
  double fusion_step_s = 300.0;
  double log_sample_s = 60.0;
  // edge transmission
  double snapshot_interval_s = 600.0;
  int snapshot_nominal_kb = 100;
  int raw_frame_kb = 100;
  int raw_fps = 10;
  int nominal_detection_kb_per_min = 40;

  EmulatorParams emulator;

  /// Throws ErrorKind::Config describing the first violated constraint.
  void validate() const;

  /// `key=value` lines, `#` comments. Unknown keys and malformed values throw
  /// ErrorKind::Config naming the line.
  static PipelineConfig parse(std::string_view text, const std::string& source_name = "<memory>");
  static PipelineConfig load(const std::filesystem::path& path);
  std::string to_text() const;

  std::int64_t t_track_ms() const;
  std::int64_t reid_window_ms() const;
  std::int64_t fusion_step_ms() const;
  std::int64_t log_sample_ms() const;
  std::int64_t snapshot_interval_ms() const;
};

}  // namespace parksense
