#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "expect.hpp"
#include "oracles.hpp"
#include "parksense/wire.hpp"

using namespace parksense;

namespace {

Detection det(std::string cls, BoundingBox b, double score, DetectorKind kind = DetectorKind::Ssd) {
  Detection d;
  d.kind = kind;
  d.class_label = std::move(cls);
  d.bbox = b;
  d.score = score;
  return d;
}

FrameMessage frame(std::string node, std::uint64_t seq, TimestampMs ts, DetectorKind kind,
                   std::vector<Detection> dets) {
  FrameMessage f{std::move(node), seq, ts, kind, std::move(dets)};
  for (auto& d : f.detections) {
    d.node_id = f.node_id;
    d.frame_seq = seq;
    d.ts = ts;
    d.kind = kind;
  }
  return f;
}

// Reference encoder written directly from the grammar.
std::string reference_encoding(const WireMessage& m) {
  char buf[256];
  if (auto* p = std::get_if<SnapshotNotice>(&m)) {
    std::snprintf(buf, sizeof buf, "P,1,%s,%lld,%u\n", p->node_id.c_str(), static_cast<long long>(p->ts),
                  p->nominal_kb);
    return buf;
  }
  const auto& f = std::get<FrameMessage>(m);
  std::snprintf(buf, sizeof buf, "H,1,%s,%llu,%lld,%s,%zu\n", f.node_id.c_str(),
                static_cast<unsigned long long>(f.frame_seq), static_cast<long long>(f.ts),
                f.kind == DetectorKind::Ssd ? "S" : "B", f.detections.size());
  std::string out = buf;
  for (const auto& d : f.detections) {
    std::snprintf(buf, sizeof buf, "D,%s,%.0f,%.0f,%.0f,%.0f,%.4f\n", d.class_label.c_str(), d.bbox.x1, d.bbox.y1,
                  d.bbox.x2, d.bbox.y2, d.score);
    out += buf;
  }
  return out;
}

WireMessage random_message(oracle::Gen& g) {
  static const char* nodes[] = {"n3", "n6", "lot16", "cam-7", "A_1"};
  const std::string node = nodes[g.integer(0, 4)];
  const TimestampMs ts = g.integer(0, 2'000'000'000);
  if (g.coin(0.1)) return SnapshotNotice{node, ts, static_cast<std::uint32_t>(g.integer(0, 5000))};
  const bool ssd = g.coin();
  static const char* classes[] = {"car", "van", "bus", "truck", "person", "bicycle"};
  std::vector<Detection> dets;
  const int n = g.integer(0, 6);
  for (int k = 0; k < n; ++k) {
    const auto b = g.pixel_box(4000, 400);
    if (ssd) {
      dets.push_back(det(classes[g.integer(0, 5)], b, g.integer(0, 10000) / 10000.0));
    } else {
      dets.push_back(det("blob", b, 1.0, DetectorKind::Bg));
    }
  }
  return frame(node, static_cast<std::uint64_t>(g.integer(0, 1 << 30)), ts, ssd ? DetectorKind::Ssd : DetectorKind::Bg,
               dets);
}

ErrorKind decode_kind(const std::string& bytes) {
  return kind_of([&] { decode(bytes); });
}

std::size_t error_line(const std::string& bytes) {
  try {
    decode(bytes);
  } catch (const Error& e) {
    return e.line().value_or(0);
  }
  return 0;
}

}  // namespace

TEST_CASE("single car frame round-trips byte-identically") {
  const WireMessage m = frame("n6", 3, 12000, DetectorKind::Ssd, {det("car", {10, 20, 106, 100}, 0.9312)});
  const auto bytes = encode(m);
  CHECK(bytes == "H,1,n6,3,12000,S,1\nD,car,10,20,106,100,0.9312\n");
  const auto back = decode(bytes);
  REQUIRE(back.size() == 1);
  CHECK(back[0] == m);
  CHECK(encode(back[0]) == bytes);
  CHECK(encode(WireMessage{SnapshotNotice{"n6", 500, 100}}) == "P,1,n6,500,100\n");
}

TEST_CASE("decoder rejections") {
  CHECK(decode_kind("H,1,n6,0,0,S,1\nD,car,10,10,5,20,0.9000\n") == ErrorKind::Parse);
  CHECK(error_line("H,1,n6,0,0,S,1\nD,car,10,10,5,20,0.9000\n") == 2);
  CHECK(decode_kind("H,1,n1,7,1000,S,2\nD,car,1,1,5,5,0.5000\n") == ErrorKind::Parse);
  CHECK(decode_kind("H,1,n1,7,1000,S,2\nD,car,1,1,5,5,0.5000\nH,1,n1,8,2000,S,0\n") == ErrorKind::Parse);
  CHECK(decode_kind("H,1,n1,7,1000,S,0,9\n") == ErrorKind::Parse);
  CHECK(decode_kind("H,1,n1,x,1000,S,0\n") == ErrorKind::Parse);
  CHECK(decode_kind("H,1,n1,1,1000,Q,0\n") == ErrorKind::Parse);
  CHECK(decode_kind("H,2,n1,1,1000,S,0\n") == ErrorKind::Parse);
  CHECK(decode_kind("H,1,n1,1,1000,S,1\nD,car,1,1,5,5,1.5000\n") == ErrorKind::Parse);
  CHECK(decode_kind("H,1,n1,1,1000,S,1\nD,car,1,1,5,5,0.5\n") == ErrorKind::Parse);
  CHECK(decode_kind("H,1,n1,1,1000,S,1\nD,car,1,9,5,5,0.5000\n") == ErrorKind::Parse);
  CHECK(decode_kind("H,1,n1,1,1000,B,1\nD,car,1,1,5,5,1.0000\n") == ErrorKind::Parse);
  CHECK(decode_kind("H,1,n1,1,1000,B,1\nD,blob,1,1,5,5,0.5000\n") == ErrorKind::Parse);
  CHECK(decode_kind("D,car,1,1,5,5,0.5000\n") == ErrorKind::Parse);
  CHECK(decode_kind("X,1\n") == ErrorKind::Parse);
  CHECK(decode_kind("P,1,n1,500\n") == ErrorKind::Parse);
  CHECK(decode_kind("P,1,n1,500,100") == ErrorKind::Parse);

  try {
    decode("P,1,n,0,1\nH,1,n1,1,1000,S,1\nD,car,1,1,5,5,2.0000\n");
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.line() == std::optional<std::size_t>(3));
    CHECK(std::string(e.what()).find("score") != std::string::npos);
  }
}

TEST_CASE("tolerant tail drops an incomplete ending") {
  const std::string full = "H,1,n1,1,1000,S,1\nD,car,1,1,5,5,0.5000\nH,1,n1,2,2000,S,2\nD,car,1,1,5,5,0.5000\n";
  WireReader strict(full);
  CHECK(strict.next().has_value());
  CHECK_THROWS_AS(strict.next(), Error);

  WireReader tolerant(full, DecodeMode::TolerantTail);
  CHECK(tolerant.next().has_value());
  CHECK_FALSE(tolerant.next().has_value());
  CHECK(tolerant.truncated());

  const std::string cut = "H,1,n1,1,1000,S,1\nD,car,1,1,5,5,0.5000\nH,1,n1,2,20";
  CHECK(decode(cut, DecodeMode::TolerantTail).size() == 1);
  CHECK(decode_kind(cut) == ErrorKind::Parse);

  // a defect before the tail is still an error
  CHECK_THROWS_AS(decode("H,1,n1,1,1000,S,1\nD,car,9,1,5,5,0.5000\nH,1,n1,2,20", DecodeMode::TolerantTail), Error);

  const std::string first = full.substr(0, 39);
  WireReader clean(first, DecodeMode::TolerantTail);
  while (clean.next()) {
  }
  CHECK_FALSE(clean.truncated());
}

TEST_CASE("encoder refuses values it cannot represent") {
  auto enc = [](Detection d) { return kind_of([&] { encode(frame("n", 0, 0, DetectorKind::Ssd, {d})); }); };
  CHECK(enc(det("car", {1.5, 1, 5, 5}, 0.5)) == ErrorKind::Range);
  CHECK(enc(det("car", {-1, 1, 5, 5}, 0.5)) == ErrorKind::Range);
  CHECK(enc(det("car", {5, 1, 5, 5}, 0.5)) == ErrorKind::Range);
  CHECK(enc(det("car", {1, 1, 5, 5}, 1.2)) == ErrorKind::Range);
  CHECK(enc(det("car", {1, 1, 5, 5}, 0.12345)) == ErrorKind::Range);
  CHECK(enc(det("c,ar", {1, 1, 5, 5}, 0.5)) == ErrorKind::Range);
  CHECK(kind_of([] { encode(frame("n 1", 0, 0, DetectorKind::Ssd, {})); }) == ErrorKind::Range);
}

TEST_CASE("random messages: reference encoding and round trip") {
  oracle::Gen g(271);
  for (int k = 0; k < 3000; ++k) {
    const auto m = random_message(g);
    const auto bytes = encode(m);
    CHECK(bytes == reference_encoding(m));
    const auto back = decode(bytes);
    REQUIRE(back.size() == 1);
    CHECK(back[0] == m);
  }
}

TEST_CASE("ledger counts exact encoded bytes") {
  oracle::Gen g(5);
  VolumeLedger ledger;
  std::map<std::string, std::uint64_t> det_bytes;
  std::map<std::string, std::uint64_t> snap_bytes;
  std::map<std::string, std::uint64_t> nominal;
  std::string log;
  for (int k = 0; k < 500; ++k) {
    const auto m = random_message(g);
    const auto bytes = encode(m);
    log += bytes;
    ledger.record(m, bytes.size());
    if (auto* p = std::get_if<SnapshotNotice>(&m)) {
      snap_bytes[p->node_id] += bytes.size();
      nominal[p->node_id] += p->nominal_kb;
    } else {
      det_bytes[node_of(m)] += bytes.size();
    }
  }
  for (const auto& [node, e] : ledger.entries()) {
    CHECK(e.detection_bytes == det_bytes[node]);
    CHECK(e.snapshot_bytes == snap_bytes[node]);
    CHECK(e.snapshot_nominal_kb == nominal[node]);
  }
  WireReader r(log);
  std::size_t total = 0;
  while (r.next()) total += r.last_message_bytes();
  CHECK(total == log.size());
  CHECK(kind_of([&] { ledger.entry("nowhere"); }) == ErrorKind::Routing);
}

TEST_CASE("volume arithmetic") {
  VolumeParams params;
  VolumeLedger::Entry day;
  day.snapshot_count = 144;
  day.snapshot_nominal_kb = 144 * 100;
  day.detection_bytes = 57'600'000;
  const auto r = volume_report(day, 86400, params);
  CHECK(r.raw_equivalent_kb == 86'400'000.0);
  CHECK(r.actual_kb == 72'000.0);
  CHECK(r.ratio == doctest::Approx(1200.0));
  CHECK(r.nominal_kb == 72'000.0);

  const auto zero = volume_report(VolumeLedger::Entry{}, 60, params);
  CHECK(zero.actual_kb == 0.0);
  CHECK(std::isinf(zero.ratio));
  CHECK(kind_of([&] { volume_report(day, 0, params); }) == ErrorKind::Range);
}
