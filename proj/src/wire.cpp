#include "parksense/wire.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "parksense/error.hpp"
#include "parksense/text.hpp"

namespace parksense {

namespace {

bool plain_field(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c == ',' || c == '\n' || c == '\r' || c == ' ' || c == '\t') return false;
  }
  return true;
}

bool pixel_coord(double v) { return std::isfinite(v) && v >= 0 && v <= 1e15 && std::floor(v) == v; }

std::string format_score(double score) { return fmt::format("{:.4f}", score); }

void encode_frame(const FrameMessage& m, std::string& out) {
  if (!plain_field(m.node_id)) throw Error(ErrorKind::Range, fmt::format("node_id '{}' is not encodable", m.node_id));
  fmt::format_to(std::back_inserter(out), "H,1,{},{},{},{},{}\n", m.node_id, m.frame_seq, m.ts,
                 m.kind == DetectorKind::Ssd ? 'S' : 'B', m.detections.size());
  for (const auto& d : m.detections) {
    if (!plain_field(d.class_label)) {
      throw Error(ErrorKind::Range, fmt::format("class '{}' is not encodable", d.class_label));
    }
    const auto& b = d.bbox;
    if (!pixel_coord(b.x1) || !pixel_coord(b.y1) || !pixel_coord(b.x2) || !pixel_coord(b.y2)) {
      throw Error(ErrorKind::Range, "box coordinates must be non-negative whole pixels");
    }
    if (!(b.x1 < b.x2 && b.y1 < b.y2)) throw Error(ErrorKind::Range, "box must have positive extent");
    if (!(d.score >= 0.0 && d.score <= 1.0)) throw Error(ErrorKind::Range, "score outside [0,1]");
    const auto score = format_score(d.score);
    if (text::to_double(score) != d.score) {
      throw Error(ErrorKind::Range, fmt::format("score {} is not on the 1e-4 grid", d.score));
    }
    fmt::format_to(std::back_inserter(out), "D,{},{},{},{},{},{}\n", d.class_label, static_cast<std::int64_t>(b.x1),
                   static_cast<std::int64_t>(b.y1), static_cast<std::int64_t>(b.x2), static_cast<std::int64_t>(b.y2),
                   score);
  }
}

}  // namespace

const std::string& node_of(const WireMessage& msg) {
  return std::visit([](const auto& m) -> const std::string& { return m.node_id; }, msg);
}

TimestampMs ts_of(const WireMessage& msg) {
  return std::visit([](const auto& m) { return m.ts; }, msg);
}

void encode(const WireMessage& msg, std::string& out) {
  if (const auto* f = std::get_if<FrameMessage>(&msg)) {
    encode_frame(*f, out);
    return;
  }
  const auto& p = std::get<SnapshotNotice>(msg);
  if (!plain_field(p.node_id)) throw Error(ErrorKind::Range, fmt::format("node_id '{}' is not encodable", p.node_id));
  fmt::format_to(std::back_inserter(out), "P,1,{},{},{}\n", p.node_id, p.ts, p.nominal_kb);
}

std::string encode(const WireMessage& msg) {
  std::string out;
  encode(msg, out);
  return out;
}

WireReader::WireReader(std::string_view bytes, DecodeMode mode) : bytes_(bytes), mode_(mode) {}

std::optional<std::string_view> WireReader::next_line() {
  if (pos_ >= bytes_.size()) return std::nullopt;
  auto end = bytes_.find('\n', pos_);
  line_terminated_ = end != std::string_view::npos;
  if (!line_terminated_) end = bytes_.size();
  auto line = bytes_.substr(pos_, end - pos_);
  pos_ = line_terminated_ ? end + 1 : end;
  ++line_;
  return line;
}

std::optional<WireMessage> WireReader::next() {
  const std::size_t start = pos_;
  auto fail = [&](const std::string& why) -> Error {
    return Error(ErrorKind::Parse, fmt::format("line {}: {}", line_, why), line_);
  };
  // An unterminated line can only be the tail of an interrupted write.
  auto check_terminated = [&]() {
    if (line_terminated_) return true;
    if (mode_ == DecodeMode::TolerantTail) {
      truncated_ = true;
      return false;
    }
    throw fail("record is not LF-terminated");
  };

  auto line = next_line();
  if (!line) return std::nullopt;
  if (!check_terminated()) return std::nullopt;
  const auto f = text::split(*line, ',');
  auto u64 = [&](std::string_view s, const char* name) {
    auto v = text::to_int<std::uint64_t>(s);
    if (!v) throw fail(fmt::format("field {}: '{}' is not a non-negative integer", name, s));
    return *v;
  };
  auto i64 = [&](std::string_view s, const char* name) {
    auto v = text::to_int<std::int64_t>(s);
    if (!v) throw fail(fmt::format("field {}: '{}' is not an integer", name, s));
    return *v;
  };
  auto text_field = [&](std::string_view s, const char* name) {
    if (!plain_field(s)) throw fail(fmt::format("field {}: '{}' is empty or contains whitespace", name, s));
    return std::string(s);
  };

  if (f[0] == "P") {
    if (f.size() != 5) throw fail(fmt::format("P record expects 5 fields, got {}", f.size()));
    if (f[1] != "1") throw fail(fmt::format("field version: unsupported '{}'", f[1]));
    SnapshotNotice p;
    p.node_id = text_field(f[2], "node_id");
    p.ts = i64(f[3], "ts_ms");
    auto kb = text::to_int<std::uint32_t>(f[4]);
    if (!kb) throw fail(fmt::format("field nominal_kb: '{}' is not a non-negative integer", f[4]));
    p.nominal_kb = *kb;
    last_bytes_ = pos_ - start;
    return p;
  }
  if (f[0] != "H") {
    if (f[0] == "D") throw fail("D record outside a frame");
    throw fail(fmt::format("field tag: unknown record tag '{}'", f[0]));
  }
  if (f.size() != 7) throw fail(fmt::format("H record expects 7 fields, got {}", f.size()));
  if (f[1] != "1") throw fail(fmt::format("field version: unsupported '{}'", f[1]));
  FrameMessage m;
  m.node_id = text_field(f[2], "node_id");
  m.frame_seq = u64(f[3], "frame_seq");
  m.ts = i64(f[4], "ts_ms");
  if (f[5] == "S") {
    m.kind = DetectorKind::Ssd;
  } else if (f[5] == "B") {
    m.kind = DetectorKind::Bg;
  } else {
    throw fail(fmt::format("field kind: '{}' is not S or B", f[5]));
  }
  const auto count = u64(f[6], "count");
  m.detections.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 4096)));
  for (std::uint64_t k = 0; k < count; ++k) {
    auto dl = next_line();
    if (!dl) {
      if (mode_ == DecodeMode::TolerantTail) {
        truncated_ = true;
        return std::nullopt;
      }
      throw fail(fmt::format("field count: header announced {} detections, found {}", count, k));
    }
    if (!check_terminated()) return std::nullopt;
    const auto d = text::split(*dl, ',');
    if (d[0] != "D") {
      throw fail(fmt::format("field count: header announced {} detections, found {}", count, k));
    }
    if (d.size() != 7) throw fail(fmt::format("D record expects 7 fields, got {}", d.size()));
    Detection det;
    det.node_id = m.node_id;
    det.frame_seq = m.frame_seq;
    det.ts = m.ts;
    det.kind = m.kind;
    det.class_label = text_field(d[1], "class");
    static constexpr const char* names[] = {"x1", "y1", "x2", "y2"};
    double c[4];
    for (int i = 0; i < 4; ++i) c[i] = static_cast<double>(u64(d[2 + i], names[i]));
    if (!(c[0] < c[2])) throw fail(fmt::format("field x1: x1 ({}) must be < x2 ({})", d[2], d[4]));
    if (!(c[1] < c[3])) throw fail(fmt::format("field y1: y1 ({}) must be < y2 ({})", d[3], d[5]));
    det.bbox = {c[0], c[1], c[2], c[3]};
    auto score = text::to_double(d[6]);
    if (!score || d[6].size() < 6 || d[6][d[6].size() - 5] != '.') {
      throw fail(fmt::format("field score: '{}' is not a 4-decimal number", d[6]));
    }
    if (!(*score >= 0.0 && *score <= 1.0)) throw fail(fmt::format("field score: {} outside [0,1]", d[6]));
    det.score = *score;
    if (m.kind == DetectorKind::Bg && (det.class_label != kBlobLabel || det.score != 1.0)) {
      throw fail("field class: BG detections must be 'blob' with score 1.0000");
    }
    m.detections.push_back(std::move(det));
  }
  last_bytes_ = pos_ - start;
  return m;
}

std::vector<WireMessage> decode(std::string_view bytes, DecodeMode mode) {
  std::vector<WireMessage> out;
  WireReader reader(bytes, mode);
  while (auto m = reader.next()) out.push_back(std::move(*m));
  return out;
}

void VolumeLedger::record(const WireMessage& msg, std::size_t encoded_bytes) {
  if (encoded_bytes == 0) encoded_bytes = encode(msg).size();
  auto& e = entries_[node_of(msg)];
  const auto ts = ts_of(msg);
  if (!e.first_ts || ts < *e.first_ts) e.first_ts = ts;
  if (!e.last_ts || ts > *e.last_ts) e.last_ts = ts;
  if (const auto* f = std::get_if<FrameMessage>(&msg)) {
    e.detection_bytes += encoded_bytes;
    e.detection_records += f->detections.size();
  } else {
    e.snapshot_bytes += encoded_bytes;
    e.snapshot_count += 1;
    e.snapshot_nominal_kb += std::get<SnapshotNotice>(msg).nominal_kb;
  }
}

void VolumeLedger::add(const std::string& node_id, RecordClass cls, std::uint64_t bytes) {
  auto& e = entries_[node_id];
  (cls == RecordClass::Detection ? e.detection_bytes : e.snapshot_bytes) += bytes;
}

void VolumeLedger::add_snapshot(const std::string& node_id, std::uint64_t nominal_kb) {
  auto& e = entries_[node_id];
  e.snapshot_count += 1;
  e.snapshot_nominal_kb += nominal_kb;
}

const VolumeLedger::Entry& VolumeLedger::entry(const std::string& node_id) const {
  auto it = entries_.find(node_id);
  if (it == entries_.end()) throw Error(ErrorKind::Routing, fmt::format("no traffic recorded for node '{}'", node_id));
  return it->second;
}

VolumeReport volume_report(const VolumeLedger::Entry& entry, double elapsed_s, const VolumeParams& params) {
  if (!(elapsed_s > 0)) throw Error(ErrorKind::Range, "elapsed time must be > 0");
  VolumeReport r;
  r.elapsed_s = elapsed_s;
  r.raw_equivalent_kb = static_cast<double>(params.raw_fps) * params.raw_frame_kb * elapsed_s;
  r.actual_kb = static_cast<double>(entry.detection_bytes + entry.snapshot_bytes) / 1000.0 +
                static_cast<double>(entry.snapshot_nominal_kb);
  r.ratio = r.actual_kb > 0 ? r.raw_equivalent_kb / r.actual_kb : std::numeric_limits<double>::infinity();
  r.nominal_kb = params.nominal_detection_kb_per_min * elapsed_s / 60.0 + static_cast<double>(entry.snapshot_nominal_kb);
  return r;
}

}  // namespace parksense
