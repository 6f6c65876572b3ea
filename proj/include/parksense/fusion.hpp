#pragma once

#include <span>
#include <vector>

#include "parksense/config.hpp"
#include "parksense/occupancy_ssd.hpp"
#include "parksense/space_map.hpp"

namespace parksense {

enum class FusionMode { Normal, Warning };

std::string_view to_string(FusionMode mode);

struct FusionState {
  FusionMode mode = FusionMode::Normal;
  long ssd_prev_count = 0;
  TimestampMs last_step_ts = 0;
};

/// a/b, with 0/0 = 1 and a/0 = 2 for a > 0.
double safe_ratio(long a, long b);

/// ssd_t/bg_t + ssd_t/ssd_prev using safe_ratio. Negative counts throw
/// ErrorKind::Domain.
double lighting_metric(long ssd_t, long bg_t, long ssd_prev);

/// One fusion step. Normal -> Warning when the lighting metric drops below
/// r_warn; Warning -> Normal when ssd_t/bg_t recovers to r_reactivate.
FusionState update_mode(const FusionState& state, long ssd_t, long bg_t, const PipelineConfig& cfg,
                        TimestampMs ts = 0);

struct OcclusionFlag {
  std::size_t host = 0;
  std::size_t occluded = 0;
  std::size_t detection = 0;
};

/// A vehicle box covering at least occ_pct of two neighboring spaces. The
/// space lower in the image hosts the vehicle; the other is occluded. Boxes
/// covering one space, three or more spaces, or two non-neighbors are not
/// flagged.
std::vector<OcclusionFlag> detect_occlusions(const SsdSnapshot& snapshot, const NodeLayout& layout,
                                             const PipelineConfig& cfg);

struct FusedStatus {
  SpaceStatus status = SpaceStatus::Unknown;
  StatusSource source = StatusSource::Ssd;

  bool operator==(const FusedStatus&) const = default;
};

std::vector<FusedStatus> fuse(const StatusMap& ssd, const StatusMap& bg, const FusionState& state,
                              std::span<const OcclusionFlag> flags);

}  // namespace parksense
