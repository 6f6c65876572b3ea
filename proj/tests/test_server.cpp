#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "expect.hpp"
#include "oracles.hpp"
#include "parksense/edge_sim.hpp"
#include "parksense/evaluation.hpp"
#include "parksense/occupancy_log.hpp"
#include "parksense/run.hpp"
#include "parksense/server.hpp"

using namespace parksense;

namespace {

constexpr auto O = SpaceStatus::Occupied;
constexpr auto V = SpaceStatus::Vacant;

const SpaceMap& garage() {
  static const auto map = SpaceMap::load(std::string(PARKSENSE_DATA_DIR) + "/spaces/garage.txt");
  return map;
}

Scenario scenario(const std::string& name) {
  return Scenario::load(std::string(PARKSENSE_DATA_DIR) + "/scenarios/" + name);
}

FrameMessage ssd_frame(const std::string& node, TimestampMs ts, std::vector<BoundingBox> boxes) {
  FrameMessage f;
  f.node_id = node;
  f.ts = ts;
  f.kind = DetectorKind::Ssd;
  for (const auto& b : boxes) {
    Detection d;
    d.node_id = node;
    d.ts = ts;
    d.kind = DetectorKind::Ssd;
    d.class_label = "car";
    d.bbox = b;
    d.score = 0.9;
    f.detections.push_back(d);
  }
  return f;
}

FrameMessage bg_frame(const std::string& node, TimestampMs ts) {
  FrameMessage f;
  f.node_id = node;
  f.ts = ts;
  f.kind = DetectorKind::Bg;
  return f;
}

// Two nodes: fig4 on n6 and the occlusion script on n3, merged in ts order.
const std::string& two_node_wire() {
  static const std::string wire = [] {
    std::vector<Scenario> scns{scenario("occlusion.scn"), scenario("fig4.scn")};
    return simulate_wire(scns, garage(), PipelineConfig{});
  }();
  return wire;
}

std::vector<OccupancyRecord> of_node(const std::vector<OccupancyRecord>& log, const std::string& node) {
  std::vector<OccupancyRecord> out;
  std::copy_if(log.begin(), log.end(), std::back_inserter(out), [&](auto& r) { return r.node_id == node; });
  return out;
}

// Truth CSV with every space on one status from 0 to end.
std::string flat_truth(const std::vector<std::string>& ids, SpaceStatus s, TimestampMs end) {
  std::string out = "ts_ms,space_id,status\n";
  for (const auto& id : ids) {
    out += "0," + id + "," + std::string(to_string(s)) + "\n";
    out += std::to_string(end) + "," + id + "," + std::string(to_string(s)) + "\n";
  }
  return out;
}

std::vector<std::string> sixteen() {
  std::vector<std::string> ids;
  for (int i = 0; i < 16; ++i) ids.push_back("s" + std::to_string(i));
  return ids;
}

std::vector<OccupancyRecord> all_at(TimestampMs ts, const std::vector<std::string>& ids, SpaceStatus s,
                                    int wrong = 0) {
  std::vector<OccupancyRecord> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto st = static_cast<int>(i) < wrong ? (s == O ? V : O) : s;
    out.push_back({ts, "lot", ids[i], st, StatusSource::Ssd});
  }
  return out;
}

}  // namespace

TEST_CASE("cold start bootstraps from the first SSD frame") {
  const auto& l = garage().layout("n3");
  NodePipeline p(l, PipelineConfig{});
  CHECK_FALSE(p.bootstrapped());
  CHECK(p.ingest(bg_frame("n3", 100)).records.empty());
  CHECK_FALSE(p.bootstrapped());

  const auto r503 = l.spaces[*l.index_of("503")].rect;
  const auto res = p.ingest(ssd_frame("n3", 1000, {r503}));
  CHECK(res.accepted);
  CHECK(p.bootstrapped());
  REQUIRE(res.records.size() == l.size());
  for (const auto& rec : res.records) {
    CHECK(rec.source == StatusSource::Ssd);
    CHECK(rec.ts == 1000);
    CHECK(rec.status == (rec.space_id == "503" ? O : V));
  }
  CHECK(p.bg().current() == p.ssd_status());
  CHECK(p.fusion_state().mode == FusionMode::Normal);

  // unchanged frames before the next sample emit nothing
  CHECK(p.ingest(ssd_frame("n3", 2000, {r503})).records.empty());
  const auto later = p.ingest(ssd_frame("n3", 3000, {}));
  REQUIRE(later.records.size() == 1);
  CHECK(later.records[0].space_id == "503");
  CHECK(later.records[0].status == V);
  CHECK(p.ingest(ssd_frame("n3", 61000, {})).records.size() == l.size());
}

TEST_CASE("out-of-order frames are dropped without touching state") {
  const auto& l = garage().layout("n3");
  NodePipeline p(l, PipelineConfig{});
  const auto r503 = l.spaces[*l.index_of("503")].rect;
  p.ingest(ssd_frame("n3", 5000, {r503}));
  const auto status = p.ssd_status();
  const auto final_status = p.final_status();

  const auto late = p.ingest(ssd_frame("n3", 4000, {}));
  CHECK_FALSE(late.accepted);
  CHECK(late.records.empty());
  CHECK(late.diagnostic.find("dropped") != std::string::npos);
  CHECK(p.ssd_status() == status);
  CHECK(p.final_status() == final_status);
  CHECK_FALSE(p.ingest(ssd_frame("n3", 5000, {})).accepted);
  CHECK(p.ingest(bg_frame("n3", 5000)).accepted);
  CHECK_FALSE(p.ingest(bg_frame("n3", 5000)).accepted);
  CHECK_FALSE(p.ingest(bg_frame("n3", 4900)).accepted);
  CHECK(p.ssd_status() == status);
  CHECK(kind_of([&] { p.ingest(ssd_frame("n6", 9000, {})); }) == ErrorKind::Routing);

  Server s(garage(), PipelineConfig{});
  s.ingest(ssd_frame("n3", 5000, {}));
  s.ingest(ssd_frame("n3", 3000, {}));
  CHECK(s.diagnostics().size() == 1);
  CHECK(kind_of([&] { s.ingest(ssd_frame("nowhere", 1, {})); }) == ErrorKind::Routing);
}

TEST_CASE("stop-and-go arrival yields one BG occupied event") {
  const auto r = replay_serial(simulate_wire({scenario("fig4.scn")}, garage(), PipelineConfig{}), garage(),
                               PipelineConfig{});
  int events = 0;
  for (const auto& rec : r.log) {
    if (rec.source == StatusSource::Bg) {
      CHECK(rec.space_id == "1015");
      events += rec.status == O;
    }
  }
  CHECK(events == 1);
  CHECK(r.diagnostics.empty());
}

TEST_CASE("noiseless traffic: BG map converges to ground truth between maneuvers") {
  PipelineConfig cfg;
  auto& e = cfg.emulator;
  e.ssd_recall_lo = e.ssd_recall_hi = 1.0;
  e.ssd_jitter_px = 0;
  e.ssd_fp_rate = 0;
  e.bg_noise_rate = 0;
  const auto scn = scenario("demo_n6.scn");
  const auto& l = garage().layout("n6");
  Scenario first_hours = scn;
  first_hours.duration_ms = 14 * 3600 * 1000;
  first_hours.lighting.clear();
  EdgeNode node(first_hours, l, cfg);
  NodePipeline p(l, cfg);

  // ends of maneuvers, checked 6 s later while nothing else moves
  std::vector<TimestampMs> checks;
  for (std::size_t i = 0; i < first_hours.vehicles.size(); ++i) {
    const auto& v = first_hours.vehicles[i];
    if (v.arrive_ms >= 0) checks.push_back(v.park_ms + 6000);
    if (v.depart_ms) checks.push_back(*v.depart_ms + static_cast<TimestampMs>(node.world().departure_duration_ms(i)) + 6000);
  }
  std::sort(checks.begin(), checks.end());
  std::size_t next = 0;
  int checked = 0;
  while (auto m = node.next()) {
    if (auto* f = std::get_if<FrameMessage>(&*m)) {
      p.ingest(*f);
      while (next < checks.size() && checks[next] <= f->ts) {
        if (checks[next] + 200 > f->ts && checks[next] < first_hours.duration_ms) {
          CHECK(p.bg().current() == node.world().ground_truth_at(f->ts));
          ++checked;
        }
        ++next;
      }
    }
  }
  CHECK(checked > 10);
}

TEST_CASE("evaluate examples") {
  const auto ids = sixteen();
  const auto truth = GroundTruth::parse_csv(flat_truth(ids, O, 600000));
  EvaluationOptions opt;

  auto perfect = all_at(0, ids, O);
  auto r = evaluate(perfect, truth, opt);
  CHECK(r.overall.accuracy_pct() == 100.0);
  CHECK(r.instants == 1);

  auto one_wrong = all_at(0, ids, O, 1);
  r = evaluate(one_wrong, truth, opt);
  CHECK(r.overall.accuracy_pct() == 93.75);
  CHECK(r.overall.occupied_as_vacant == 1);

  auto two = all_at(0, ids, O);
  const auto second = all_at(60000, ids, O, 2);
  two.insert(two.end(), second.begin(), second.end());
  r = evaluate(two, truth, opt);
  CHECK(r.instants == 2);
  CHECK(r.overall.total() == 32);
  CHECK(r.overall.correct() == 30);
  CHECK(r.overall.accuracy_pct() == 93.75);

  // BG audit records do not count as final statuses
  auto with_audit = perfect;
  with_audit.push_back({0, "lot", "s3", V, StatusSource::Bg});
  CHECK(evaluate(with_audit, truth, opt).overall.accuracy_pct() == 100.0);

  // a space the truth does not know
  auto stranger = perfect;
  stranger.push_back({0, "lot", "zz", O, StatusSource::Ssd});
  CHECK(kind_of([&] { evaluate(stranger, truth, opt); }) == ErrorKind::Map);

  // no overlap with the truth
  auto late = all_at(700000, ids, O);
  CHECK(kind_of([&] { evaluate(late, truth, opt); }) == ErrorKind::Range);
  CHECK(kind_of([&] { evaluate(std::vector<OccupancyRecord>{}, truth, opt); }) == ErrorKind::Range);
}

TEST_CASE("evaluate_serial matches evaluate on a simulated run") {
  std::vector<Scenario> scns{scenario("occlusion.scn"), scenario("fig4.scn")};
  const auto art = simulate(scns, garage(), PipelineConfig{}, std::nullopt, 60000);
  for (TimestampMs sample : {1000, 7000, 60000}) {
    EvaluationOptions opt;
    opt.sample_ms = sample;
    opt.tagger = lighting_tagger(scns);
    if (sample == 7000) {
      opt.window_begin = 300000;
      opt.window_end = 900000;
    }
    const auto a = evaluate(art.server.log, art.truth, opt);
    const auto b = evaluate_serial(art.server.log, art.truth, opt);
    CHECK(a.instants == b.instants);
    CHECK(a.overall.correct() == b.overall.correct());
    CHECK(a.overall.total() == b.overall.total());
    CHECK(a.by_condition.size() == b.by_condition.size());
    for (const auto& [tag, c] : a.by_condition) CHECK(b.by_condition.at(tag).correct() == c.correct());
  }
}

TEST_CASE("occupancy log round trip") {
  oracle::Gen g(1);
  std::vector<OccupancyRecord> recs;
  const SpaceStatus statuses[] = {O, V, SpaceStatus::Unknown};
  const StatusSource sources[] = {StatusSource::Ssd, StatusSource::Bg, StatusSource::FusedWarning,
                                  StatusSource::FusedOcclusion};
  for (int k = 0; k < 1000; ++k) {
    recs.push_back({g.integer(0, 1 << 30), g.coin() ? "n3" : "n6", std::to_string(g.integer(500, 1100)),
                    statuses[g.integer(0, 2)], sources[g.integer(0, 3)]});
  }
  const auto csv = occupancy_csv(recs);
  CHECK(csv.rfind(std::string(kOccupancyCsvHeader) + "\n", 0) == 0);
  CHECK(parse_occupancy_csv(csv) == recs);
  CHECK(parse_occupancy_csv(occupancy_csv(std::vector<OccupancyRecord>{})).empty());
  CHECK(parse_occupancy_csv("").empty());

  CHECK(kind_of([] { parse_occupancy_csv("ts_ms,node_id,space_id,status,source\n1,n,s,full,SSD\n"); }) ==
        ErrorKind::Parse);
  try {
    parse_occupancy_csv("1,n,s,vacant,SSD\n2,n,s,vacant\n3,n,s,vacant,SSD\n");
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.line() == std::optional<std::size_t>(2));
  }
}

TEST_CASE("every prefix of a server log is a valid log") {
  const auto r = replay_serial(two_node_wire(), garage(), PipelineConfig{});
  std::vector<OccupancyRecord> head(r.log.begin(), r.log.begin() + std::min<std::size_t>(r.log.size(), 300));
  const auto csv = occupancy_csv(head);
  // end of each data row's content, newline excluded
  std::vector<std::size_t> row_end;
  for (std::size_t pos = csv.find('\n') + 1; pos < csv.size(); pos = csv.find('\n', pos) + 1) {
    row_end.push_back(csv.find('\n', pos));
  }
  REQUIRE(row_end.size() == head.size());
  for (std::size_t cut = 0; cut <= csv.size(); ++cut) {
    const auto complete = static_cast<std::size_t>(
        std::count_if(row_end.begin(), row_end.end(), [&](std::size_t e) { return e <= cut; }));
    const auto parsed = parse_occupancy_csv(std::string_view(csv).substr(0, cut));
    REQUIRE(parsed.size() == complete);
    CHECK(std::equal(parsed.begin(), parsed.end(), head.begin()));
  }
}

TEST_CASE("server log keeps per-space time order") {
  const auto r = replay_serial(two_node_wire(), garage(), PipelineConfig{});
  std::map<std::pair<std::string, std::string>, TimestampMs> last;
  for (const auto& rec : r.log) {
    auto [it, fresh] = last.try_emplace({rec.node_id, rec.space_id}, rec.ts);
    if (!fresh) {
      CHECK(rec.ts >= it->second);
      it->second = rec.ts;
    }
  }
}

TEST_CASE("replay is deterministic and the parallel path matches the serial one") {
  const auto& wire = two_node_wire();
  const auto a = replay_serial(wire, garage(), PipelineConfig{});
  const auto b = replay_serial(wire, garage(), PipelineConfig{});
  const auto c = replay_parallel(wire, garage(), PipelineConfig{});
  CHECK(occupancy_csv(a.log) == occupancy_csv(b.log));
  CHECK(a.log == c.log);
  CHECK(a.ssd_only_log == c.ssd_only_log);
  CHECK(a.diagnostics == c.diagnostics);
  CHECK(a.messages == c.messages);
  CHECK(a.detection_records == c.detection_records);
  CHECK(volume_csv(a.ledger, PipelineConfig{}) == volume_csv(c.ledger, PipelineConfig{}));
  for (const auto& [node, t] : a.transitions) {
    REQUIRE(c.transitions.at(node).size() == t.size());
    for (std::size_t k = 0; k < t.size(); ++k) CHECK(c.transitions.at(node)[k].ts == t[k].ts);
  }

  // with dropped frames and a truncated tail
  auto bent = wire.substr(0, wire.rfind('\n', wire.size() / 2) + 1);
  bent += "H,1,n6,999999,1000,S,0\n";
  bent += "H,1,n3,999999,1000,S,0\nH,1,n3,5,10";
  const auto d = replay_serial(bent, garage(), PipelineConfig{}, DecodeMode::TolerantTail);
  const auto e = replay_parallel(bent, garage(), PipelineConfig{}, DecodeMode::TolerantTail);
  CHECK(d.truncated);
  CHECK(e.truncated);
  CHECK(d.diagnostics.size() == 2);
  CHECK(d.diagnostics == e.diagnostics);
  CHECK(d.log == e.log);

  const std::string stranger = "H,1,n9,0,0,S,0\n";
  CHECK(kind_of([&] { replay_serial(stranger, garage(), PipelineConfig{}); }) == ErrorKind::Routing);
  CHECK(kind_of([&] { replay_parallel(stranger, garage(), PipelineConfig{}); }) == ErrorKind::Routing);
}

TEST_CASE("node isolation under any interleaving") {
  const auto msgs = decode(two_node_wire());
  std::vector<WireMessage> n3;
  std::vector<WireMessage> n6;
  for (const auto& m : msgs) (node_of(m) == "n3" ? n3 : n6).push_back(m);
  auto run = [&](const std::vector<WireMessage>& seq) {
    Server s(garage(), PipelineConfig{});
    for (const auto& m : seq) s.ingest(m);
    return s.log();
  };
  const auto base = run(msgs);
  oracle::Gen g(4);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<WireMessage> mixed;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < n3.size() || j < n6.size()) {
      const bool take3 = j == n6.size() || (i < n3.size() && g.coin(trial == 0 ? 0.9 : 0.5));
      mixed.push_back(take3 ? n3[i++] : n6[j++]);
    }
    const auto log = run(mixed);
    CHECK(of_node(log, "n3") == of_node(base, "n3"));
    CHECK(of_node(log, "n6") == of_node(base, "n6"));
  }
}

TEST_CASE("occupancy pattern buckets") {
  SUBCASE("constant five occupied") {
    std::vector<OccupancyRecord> log;
    for (TimestampMs ts = 0; ts <= 3600000; ts += 60000) {
      for (int i = 0; i < 8; ++i) log.push_back({ts, "n", std::to_string(i), i < 5 ? O : V, StatusSource::Ssd});
    }
    const auto rows = occupancy_pattern(log, 600000);
    REQUIRE(rows.size() == 7);
    for (const auto& r : rows) {
      CHECK(r.occupied == 5);
      CHECK(r.total_spaces == 8);
      CHECK(r.bucket_start % 600000 == 0);
    }
  }
  SUBCASE("transition mid-bucket shows at the next bucket start") {
    std::vector<OccupancyRecord> log{{0, "n", "a", V, StatusSource::Ssd},
                                     {300000, "n", "a", O, StatusSource::Ssd},
                                     {1200000, "n", "a", O, StatusSource::Ssd}};
    const auto rows = occupancy_pattern(log, 600000);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == PatternRow{0, "n", 0, 1});
    CHECK(rows[1] == PatternRow{600000, "n", 1, 1});
    CHECK(rows[2] == PatternRow{1200000, "n", 1, 1});
  }
  SUBCASE("two nodes interleave by bucket") {
    std::vector<OccupancyRecord> log{{0, "b", "x", O, StatusSource::Ssd},
                                     {0, "a", "y", V, StatusSource::Ssd},
                                     {600000, "a", "y", O, StatusSource::Ssd},
                                     {600000, "b", "x", O, StatusSource::Bg},
                                     {600000, "b", "x", O, StatusSource::Ssd}};
    const auto rows = occupancy_pattern(log, 600000);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == PatternRow{0, "a", 0, 1});
    CHECK(rows[1] == PatternRow{0, "b", 1, 1});
    CHECK(rows[2] == PatternRow{600000, "a", 1, 1});
    CHECK(rows[3] == PatternRow{600000, "b", 1, 1});
    CHECK(pattern_csv(rows).rfind("bucket_start_ms,node_id,occupied_count,total_spaces\n0,a,0,1\n", 0) == 0);
  }
  CHECK(kind_of([] { occupancy_pattern(std::vector<OccupancyRecord>{}, 600000); }) == ErrorKind::Range);
}

TEST_CASE("ground truth csv round trip") {
  const auto scn = scenario("occlusion.scn");
  const auto gt = GroundTruth::from_scenario(scn, garage().layout("n3"));
  const auto back = GroundTruth::parse_csv(gt.to_csv());
  CHECK(back.to_csv() == gt.to_csv());
  CHECK(back.end_ts() == scn.duration_ms);
  CHECK(gt.status_at("507", 300000) == O);
  CHECK(gt.status_at("507", 299999) == V);
  CHECK(gt.status_at("nope", 0) == std::nullopt);
}
