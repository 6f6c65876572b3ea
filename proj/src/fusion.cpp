#include "parksense/fusion.hpp"

#include "parksense/error.hpp"

namespace parksense {

std::string_view to_string(FusionMode mode) { return mode == FusionMode::Normal ? "normal" : "warning"; }

double safe_ratio(long a, long b) {
  if (b > 0) return static_cast<double>(a) / static_cast<double>(b);
  return a == 0 ? 1.0 : 2.0;
}

double lighting_metric(long ssd_t, long bg_t, long ssd_prev) {
  if (ssd_t < 0 || bg_t < 0 || ssd_prev < 0) throw Error(ErrorKind::Domain, "lighting_metric: negative count");
  return safe_ratio(ssd_t, bg_t) + safe_ratio(ssd_t, ssd_prev);
}

FusionState update_mode(const FusionState& state, long ssd_t, long bg_t, const PipelineConfig& cfg,
                        TimestampMs ts) {
  FusionState next = state;
  if (state.mode == FusionMode::Normal) {
    if (lighting_metric(ssd_t, bg_t, state.ssd_prev_count) < cfg.r_warn) next.mode = FusionMode::Warning;
  } else {
    if (ssd_t < 0 || bg_t < 0) throw Error(ErrorKind::Domain, "update_mode: negative count");
    if (safe_ratio(ssd_t, bg_t) >= cfg.r_reactivate) next.mode = FusionMode::Normal;
  }
  next.ssd_prev_count = ssd_t;
  next.last_step_ts = ts;
  return next;
}

std::vector<OcclusionFlag> detect_occlusions(const SsdSnapshot& snapshot, const NodeLayout& layout,
                                             const PipelineConfig& cfg) {
  std::vector<OcclusionFlag> flags;
  for (std::size_t j = 0; j < snapshot.detections.size(); ++j) {
    const auto& det = snapshot.detections[j];
    if (det.kind != DetectorKind::Ssd || !is_vehicle(det.class_label)) continue;
    std::vector<std::size_t> covered;
    for (std::size_t i = 0; i < layout.size(); ++i) {
      if (coverage(layout.spaces[i].rect, det.bbox) >= cfg.occ_pct) covered.push_back(i);
    }
    if (covered.size() != 2 || !layout.are_neighbors(covered[0], covered[1])) continue;
    auto a = covered[0];
    auto b = covered[1];
    const double ya = layout.spaces[a].rect.center().y;
    const double yb = layout.spaces[b].rect.center().y;
    if (yb > ya || (yb == ya && layout.spaces[b].space_id < layout.spaces[a].space_id)) std::swap(a, b);
    flags.push_back(OcclusionFlag{a, b, j});
  }
  return flags;
}

std::vector<FusedStatus> fuse(const StatusMap& ssd, const StatusMap& bg, const FusionState& state,
                              std::span<const OcclusionFlag> flags) {
  if (ssd.size() != bg.size()) throw Error(ErrorKind::Map, "fuse: SSD and BG maps cover different spaces");
  std::vector<FusedStatus> out(ssd.size());
  for (std::size_t i = 0; i < ssd.size(); ++i) {
    if (state.mode == FusionMode::Warning && ssd[i] != SpaceStatus::Occupied) {
      out[i] = {bg[i], StatusSource::FusedWarning};
    } else {
      out[i] = {ssd[i], StatusSource::Ssd};
    }
  }
  std::vector<char> occluded(ssd.size(), 0);
  for (const auto& f : flags) {
    if (f.occluded >= ssd.size() || f.host >= ssd.size()) throw Error(ErrorKind::Map, "fuse: flag out of range");
    occluded[f.occluded] = 1;
  }
  for (const auto& f : flags) {
    if (!occluded[f.host] && out[f.host].status != SpaceStatus::Occupied) {
      out[f.host] = {SpaceStatus::Occupied, StatusSource::FusedOcclusion};
    }
    out[f.occluded] = {bg[f.occluded], StatusSource::FusedOcclusion};
  }
  return out;
}

}  // namespace parksense
