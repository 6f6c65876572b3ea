#include "parksense/config.hpp"

#include <cmath>
#include <functional>
#include <span>
#include <variant>

#include <fmt/format.h>

#include "parksense/error.hpp"
#include "parksense/text.hpp"

namespace parksense {
namespace {

using FieldRef = std::variant<double*, int*, std::int64_t*, bool*>;

struct Field {
  const char* key;
  std::function<FieldRef(PipelineConfig&)> ref;
};

#define PS_FIELD(name) Field{#name, [](PipelineConfig& c) -> FieldRef { return &c.name; }}
#define PS_EMU(name) Field{#name, [](PipelineConfig& c) -> FieldRef { return &c.emulator.name; }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      PS_FIELD(th_max), PS_FIELD(th_min), PS_FIELD(iou_track), PS_FIELD(t_track_s), PS_FIELD(reid_window_s),
      PS_FIELD(reid_enabled), PS_FIELD(max_age_frames), PS_FIELD(min_hits), PS_FIELD(min_assoc_iou),
      PS_FIELD(r_warn), PS_FIELD(r_reactivate), PS_FIELD(occ_pct), PS_FIELD(occlusion_hold_s), PS_FIELD(fusion_step_s),
      PS_FIELD(log_sample_s), PS_FIELD(snapshot_interval_s), PS_FIELD(snapshot_nominal_kb),
      PS_FIELD(raw_frame_kb), PS_FIELD(raw_fps), PS_FIELD(nominal_detection_kb_per_min),
      PS_EMU(ssd_period_ms), PS_EMU(bg_period_ms), PS_EMU(bg_phase_ms), PS_EMU(snapshot_phase_ms),
      PS_EMU(ssd_recall_lo), PS_EMU(ssd_recall_hi), PS_EMU(ssd_jitter_px), PS_EMU(ssd_score_lo),
      PS_EMU(ssd_score_hi), PS_EMU(ssd_fp_rate), PS_EMU(ssd_min_visible), PS_EMU(occlude_frac),
      PS_EMU(bg_blob_margin_px), PS_EMU(bg_merge_dist_px), PS_EMU(bg_noise_rate), PS_EMU(bg_min_visible),
      PS_EMU(aisle_offset_px), PS_EMU(motion_eps_px),
  };
  return table;
}

#undef PS_FIELD
#undef PS_EMU

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::Config, "invalid config: " + what);
}

bool is_fraction(double v) { return v >= 0.0 && v <= 1.0; }

std::int64_t seconds_to_ms(double s) { return static_cast<std::int64_t>(std::llround(s * 1000.0)); }

}  // namespace

void PipelineConfig::validate() const {
  require(th_min > 0.0 && th_min < 1.0, "th_min must be in (0,1)");
  require(th_max > 0.0 && th_max < 1.0, "th_max must be in (0,1)");
  require(th_max > th_min, "th_max must exceed th_min");
  require(iou_track > 0.0 && iou_track <= 1.0, "iou_track must be in (0,1]");
  require(occ_pct > 0.0 && occ_pct <= 1.0, "occ_pct must be in (0,1]");
  require(t_track_s > 0.0, "t_track_s must be > 0");
  require(occlusion_hold_s >= 0.0, "occlusion_hold_s must be >= 0");
  require(reid_window_s > 0.0, "reid_window_s must be > 0");
  require(fusion_step_s > 0.0, "fusion_step_s must be > 0");
  require(log_sample_s > 0.0, "log_sample_s must be > 0");
  require(snapshot_interval_s > 0.0, "snapshot_interval_s must be > 0");
  require(r_warn > 0.0 && r_reactivate > 0.0, "r_warn and r_reactivate must be > 0");
  require(max_age_frames >= 0, "max_age_frames must be >= 0");
  require(min_hits >= 1, "min_hits must be >= 1");
  require(is_fraction(min_assoc_iou), "min_assoc_iou must be in [0,1]");
  require(snapshot_nominal_kb >= 0 && raw_frame_kb > 0 && raw_fps > 0 && nominal_detection_kb_per_min >= 0,
          "volume parameters must be positive");
  const auto& e = emulator;
  require(e.ssd_period_ms > 0 && e.bg_period_ms > 0, "detector periods must be > 0");
  require(e.bg_phase_ms >= 0 && e.snapshot_phase_ms >= 0, "phases must be >= 0");
  require(is_fraction(e.ssd_recall_lo) && is_fraction(e.ssd_recall_hi) && e.ssd_recall_lo <= e.ssd_recall_hi,
          "ssd_recall_lo/hi must satisfy 0 <= lo <= hi <= 1");
  require(is_fraction(e.ssd_score_lo) && is_fraction(e.ssd_score_hi) && e.ssd_score_lo <= e.ssd_score_hi,
          "ssd_score_lo/hi must satisfy 0 <= lo <= hi <= 1");
  require(e.ssd_jitter_px >= 0.0 && e.bg_blob_margin_px >= 0.0 && e.bg_merge_dist_px >= 0.0,
          "pixel distances must be >= 0");
  require(e.ssd_fp_rate >= 0.0 && e.bg_noise_rate >= 0.0, "noise rates must be >= 0");
  require(is_fraction(e.ssd_min_visible) && is_fraction(e.bg_min_visible) && is_fraction(e.occlude_frac),
          "visibility fractions must be in [0,1]");
  require(e.motion_eps_px >= 0.0 && e.aisle_offset_px > 0.0, "motion_eps_px >= 0, aisle_offset_px > 0");
}

PipelineConfig PipelineConfig::parse(std::string_view body, const std::string& source_name) {
  PipelineConfig cfg;
  text::LineCursor lines(body);
  std::string_view raw;
  while (lines.next(raw)) {
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    auto fail = [&](const std::string& why) {
      throw Error(ErrorKind::Config, fmt::format("{}:{}: {}", source_name, lines.number(), why), lines.number());
    };
    if (eq == std::string_view::npos) fail("expected key=value");
    const auto key = text::trim(line.substr(0, eq));
    const auto value = text::trim(line.substr(eq + 1));
    const Field* field = nullptr;
    for (const auto& f : fields()) {
      if (key == f.key) field = &f;
    }
    if (!field) fail(fmt::format("unknown key '{}'", key));
    std::visit(
        [&](auto* target) {
          using T = std::remove_pointer_t<decltype(target)>;
          if constexpr (std::is_same_v<T, bool>) {
            if (value == "true" || value == "1") *target = true;
            else if (value == "false" || value == "0") *target = false;
            else fail(fmt::format("'{}' expects true or false", key));
          } else if constexpr (std::is_same_v<T, double>) {
            auto v = text::to_double(value);
            if (!v || !std::isfinite(*v)) fail(fmt::format("'{}' expects a number", key));
            *target = *v;
          } else {
            auto v = text::to_int<T>(value);
            if (!v) fail(fmt::format("'{}' expects an integer", key));
            *target = *v;
          }
        },
        field->ref(cfg));
  }
  cfg.validate();
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  return parse(text::read_file(path.string()), path.string());
}

std::string PipelineConfig::to_text() const {
  std::string out;
  PipelineConfig copy = *this;
  for (const auto& f : fields()) {
    std::visit(
        [&](auto* target) {
          using T = std::remove_pointer_t<decltype(target)>;
          if constexpr (std::is_same_v<T, bool>) out += fmt::format("{}={}\n", f.key, *target ? "true" : "false");
          else out += fmt::format("{}={}\n", f.key, *target);
        },
        f.ref(copy));
  }
  return out;
}

std::int64_t PipelineConfig::t_track_ms() const { return seconds_to_ms(t_track_s); }
std::int64_t PipelineConfig::reid_window_ms() const { return seconds_to_ms(reid_window_s); }
std::int64_t PipelineConfig::fusion_step_ms() const { return seconds_to_ms(fusion_step_s); }
std::int64_t PipelineConfig::log_sample_ms() const { return seconds_to_ms(log_sample_s); }
std::int64_t PipelineConfig::snapshot_interval_ms() const { return seconds_to_ms(snapshot_interval_s); }

}  // namespace parksense
