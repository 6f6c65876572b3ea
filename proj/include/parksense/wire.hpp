#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "parksense/model.hpp"

namespace parksense {

/// One detector frame: `H,1,<node>,<seq>,<ts>,<S|B>,<count>` followed by
/// `count` lines `D,<class>,<x1>,<y1>,<x2>,<y2>,<score.4f>`.
struct FrameMessage {
  std::string node_id;
  std::uint64_t frame_seq = 0;
  TimestampMs ts = 0;
  DetectorKind kind = DetectorKind::Ssd;
  std::vector<Detection> detections;

  bool operator==(const FrameMessage&) const = default;
};

/// Periodic still-frame upload, metadata only: `P,1,<node>,<ts>,<nominal_kb>`.
struct SnapshotNotice {
  std::string node_id;
  TimestampMs ts = 0;
  std::uint32_t nominal_kb = 0;

  bool operator==(const SnapshotNotice&) const = default;
};

using WireMessage = std::variant<FrameMessage, SnapshotNotice>;

const std::string& node_of(const WireMessage& msg);
TimestampMs ts_of(const WireMessage& msg);

/// Appends the canonical encoding. Throws ErrorKind::Range when the message
/// cannot be represented exactly (non-integral or negative coordinates,
/// empty box, score outside [0,1] or off the 1e-4 grid, separators in text
/// fields).
void encode(const WireMessage& msg, std::string& out);
std::string encode(const WireMessage& msg);

enum class DecodeMode {
  Strict,       // any defect is an error
  TolerantTail  // an unterminated last line or a short final frame is dropped
};

/// Pull decoder over a byte buffer. Errors carry the 1-based line number and
/// name the offending field.
class WireReader {
 public:
  explicit WireReader(std::string_view bytes, DecodeMode mode = DecodeMode::Strict);

  std::optional<WireMessage> next();
  std::size_t line() const { return line_; }
  /// Bytes of the last message returned by next().
  std::size_t last_message_bytes() const { return last_bytes_; }
  bool truncated() const { return truncated_; }

 private:
  std::optional<std::string_view> next_line();

  std::string_view bytes_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
  DecodeMode mode_;
  std::size_t last_bytes_ = 0;
  bool truncated_ = false;
  bool line_terminated_ = true;
};

std::vector<WireMessage> decode(std::string_view bytes, DecodeMode mode = DecodeMode::Strict);

enum class RecordClass { Detection, Snapshot };

/// Transmitted bytes per node, split by record class.
class VolumeLedger {
 public:
  struct Entry {
    std::uint64_t detection_bytes = 0;
    std::uint64_t snapshot_bytes = 0;
    std::uint64_t snapshot_count = 0;
    std::uint64_t snapshot_nominal_kb = 0;
    std::uint64_t detection_records = 0;
    std::optional<TimestampMs> first_ts;
    std::optional<TimestampMs> last_ts;
  };

  void record(const WireMessage& msg, std::size_t encoded_bytes);
  void add(const std::string& node_id, RecordClass cls, std::uint64_t bytes);
  void add_snapshot(const std::string& node_id, std::uint64_t nominal_kb);

  const std::map<std::string, Entry>& entries() const { return entries_; }
  const Entry& entry(const std::string& node_id) const;

 private:
  std::map<std::string, Entry> entries_;
};

struct VolumeParams {
  int raw_fps = 10;
  int raw_frame_kb = 100;
  int nominal_detection_kb_per_min = 40;
};

struct VolumeReport {
  double elapsed_s = 0.0;
  double raw_equivalent_kb = 0.0;
  double actual_kb = 0.0;
  double ratio = 0.0;  // +inf when nothing was sent
  double nominal_kb = 0.0;  // detection_kb_per_min * minutes + snapshot nominal KB
};

/// KB = 1000 bytes. raw = fps * frame_kb * elapsed; actual = bytes / 1000 +
/// nominal snapshot KB.
VolumeReport volume_report(const VolumeLedger::Entry& entry, double elapsed_s, const VolumeParams& params);

}  // namespace parksense
