#include "parksense/evaluation.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "parksense/edge_sim.hpp"
#include "parksense/error.hpp"
#include "parksense/text.hpp"

namespace parksense {

GroundTruth GroundTruth::from_scenario(const Scenario& scenario, const NodeLayout& layout) {
  scenario.validate(layout);
  GroundTruth gt;
  gt.end_ts_ = scenario.duration_ms;
  // +1 at park, -1 at departure, per space.
  std::vector<std::vector<std::pair<TimestampMs, int>>> edges(layout.size());
  for (const auto& v : scenario.vehicles) {
    auto& e = edges[*layout.index_of(v.space_id)];
    e.emplace_back(v.park_ms, +1);
    if (v.depart_ms) e.emplace_back(*v.depart_ms, -1);
  }
  for (std::size_t s = 0; s < layout.size(); ++s) {
    auto& e = edges[s];
    std::sort(e.begin(), e.end());
    auto& changes = gt.changes_[layout.spaces[s].space_id];
    int level = 0;
    std::size_t k = 0;
    for (; k < e.size() && e[k].first <= 0; ++k) level += e[k].second;
    changes.push_back({0, level > 0 ? SpaceStatus::Occupied : SpaceStatus::Vacant});
    while (k < e.size()) {
      const auto ts = e[k].first;
      for (; k < e.size() && e[k].first == ts; ++k) level += e[k].second;
      const auto status = level > 0 ? SpaceStatus::Occupied : SpaceStatus::Vacant;
      if (status != changes.back().status) changes.push_back({ts, status});
    }
  }
  return gt;
}

GroundTruth GroundTruth::parse_csv(std::string_view body) {
  GroundTruth gt;
  text::LineCursor lines(body);
  std::string_view line;
  bool any = false;
  while (lines.next(line)) {
    if (lines.number() == 1 && line == "ts_ms,space_id,status") continue;
    auto fail = [&](const std::string& why) {
      throw Error(ErrorKind::Parse, fmt::format("row {}: {}", lines.number(), why), lines.number());
    };
    const auto f = text::split(line, ',');
    if (f.size() != 3) fail(fmt::format("expected 3 fields, got {}", f.size()));
    auto ts = text::to_int<TimestampMs>(f[0]);
    if (!ts) fail(fmt::format("ts_ms '{}' is not an integer", f[0]));
    if (f[1].empty()) fail("empty space_id");
    SpaceStatus status;
    try {
      status = parse_status(f[2]);
    } catch (const Error& e) {
      fail(e.what());
    }
    if (status == SpaceStatus::Unknown) fail("ground truth must be occupied or vacant");
    auto& changes = gt.changes_[std::string(f[1])];
    if (!changes.empty() && changes.back().ts > *ts) fail("rows for a space must be in time order");
    if (changes.empty() || changes.back().status != status) changes.push_back({*ts, status});
    gt.end_ts_ = any ? std::max(gt.end_ts_, *ts) : *ts;
    any = true;
  }
  return gt;
}

GroundTruth GroundTruth::load_csv(const std::filesystem::path& path) {
  try {
    return parse_csv(text::read_file(path.string()));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Parse) throw;
    throw Error(ErrorKind::Parse, fmt::format("{}: {}", path.string(), e.what()), e.line());
  }
}

void GroundTruth::merge(const GroundTruth& other) {
  for (const auto& [id, changes] : other.changes_) {
    if (changes_.count(id)) throw Error(ErrorKind::Map, fmt::format("space '{}' has ground truth twice", id));
    changes_[id] = changes;
  }
  end_ts_ = std::max(end_ts_, other.end_ts_);
}

std::string GroundTruth::to_csv() const {
  struct Row {
    TimestampMs ts;
    const std::string* id;
    SpaceStatus status;
  };
  std::vector<Row> rows;
  for (const auto& [id, changes] : changes_) {
    for (const auto& c : changes) rows.push_back({c.ts, &id, c.status});
    // Closing row so the file carries the covered time span.
    if (changes.back().ts < end_ts_) rows.push_back({end_ts_, &id, changes.back().status});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.ts < b.ts; });
  std::string out = "ts_ms,space_id,status\n";
  auto it = std::back_inserter(out);
  for (const auto& r : rows) fmt::format_to(it, "{},{},{}\n", r.ts, *r.id, to_string(r.status));
  return out;
}

std::optional<SpaceStatus> GroundTruth::status_at(std::string_view space_id, TimestampMs ts) const {
  auto it = changes_.find(space_id);
  if (it == changes_.end()) return std::nullopt;
  const auto& c = it->second;
  auto pos = std::upper_bound(c.begin(), c.end(), ts, [](TimestampMs t, const Change& ch) { return t < ch.ts; });
  if (pos == c.begin()) return std::nullopt;
  return std::prev(pos)->status;
}

bool GroundTruth::has_space(std::string_view space_id) const { return changes_.find(space_id) != changes_.end(); }

std::uint64_t Confusion::total() const {
  return occupied_as_occupied + vacant_as_occupied + occupied_as_vacant + vacant_as_vacant;
}

std::uint64_t Confusion::correct() const { return occupied_as_occupied + vacant_as_vacant; }

double Confusion::accuracy_pct() const {
  const auto t = total();
  return t == 0 ? 0.0 : 100.0 * static_cast<double>(correct()) / static_cast<double>(t);
}

Confusion& Confusion::operator+=(const Confusion& o) {
  occupied_as_occupied += o.occupied_as_occupied;
  vacant_as_occupied += o.vacant_as_occupied;
  occupied_as_vacant += o.occupied_as_vacant;
  vacant_as_vacant += o.vacant_as_vacant;
  return *this;
}

namespace {

void score(Confusion& c, SpaceStatus predicted, SpaceStatus actual) {
  const bool p = predicted == SpaceStatus::Occupied;
  const bool a = actual == SpaceStatus::Occupied;
  if (a && p) ++c.occupied_as_occupied;
  else if (a) ++c.occupied_as_vacant;
  else if (p) ++c.vacant_as_occupied;
  else ++c.vacant_as_vacant;
}

// Final records of one node, grouped per space in time order.
struct NodeSeries {
  std::string node_id;
  std::vector<std::string> spaces;
  std::vector<std::vector<std::pair<TimestampMs, SpaceStatus>>> changes;
  TimestampMs first_ts = 0;
  TimestampMs last_ts = 0;
};

std::vector<NodeSeries> split_by_node(std::span<const OccupancyRecord> log) {
  std::map<std::string, NodeSeries> nodes;
  std::map<std::pair<std::string, std::string>, std::size_t> space_index;
  for (const auto& r : log) {
    if (!is_final_source(r.source)) continue;
    auto [it, fresh] = nodes.try_emplace(r.node_id);
    auto& n = it->second;
    if (fresh) {
      n.node_id = r.node_id;
      n.first_ts = r.ts;
    }
    n.first_ts = std::min(n.first_ts, r.ts);
    n.last_ts = std::max(n.last_ts, r.ts);
    auto [si, added] = space_index.try_emplace({r.node_id, r.space_id}, n.spaces.size());
    if (added) {
      n.spaces.push_back(r.space_id);
      n.changes.emplace_back();
    }
    auto& ch = n.changes[si->second];
    if (!ch.empty() && ch.back().first > r.ts) {
      throw Error(ErrorKind::Ordering, fmt::format("records for {}/{} go back in time at {}", r.node_id, r.space_id, r.ts));
    }
    ch.emplace_back(r.ts, r.status);
  }
  std::vector<NodeSeries> out;
  for (auto& [id, n] : nodes) out.push_back(std::move(n));
  return out;
}

struct Grid {
  TimestampMs first = 0;
  std::int64_t count = 0;
};

Grid sample_grid(const NodeSeries& n, const GroundTruth& truth, const EvaluationOptions& opt) {
  TimestampMs begin = n.first_ts;
  TimestampMs end = std::min(n.last_ts, truth.end_ts());  // inclusive
  if (opt.window_begin) begin = std::max(begin, *opt.window_begin);
  if (opt.window_end) end = std::min(end, *opt.window_end - 1);
  const TimestampMs s = opt.sample_ms;
  TimestampMs first = begin >= 0 ? (begin + s - 1) / s * s : -((-begin) / s * s);
  if (first > end) return {first, 0};
  return {first, (end - first) / s + 1};
}

std::string condition(const EvaluationOptions& opt, const std::string& node, TimestampMs ts) {
  return opt.tagger ? opt.tagger(node, ts) : std::string("all");
}

void check_options(const EvaluationOptions& opt) {
  if (opt.sample_ms <= 0) throw Error(ErrorKind::Range, "sample interval must be > 0");
}

void check_truth(const NodeSeries& n, const GroundTruth& truth) {
  for (const auto& s : n.spaces) {
    if (!truth.has_space(s)) throw Error(ErrorKind::Map, fmt::format("space '{}' has no ground truth", s));
  }
}

void finish(EvaluationReport& r) {
  if (r.overall.total() == 0) throw Error(ErrorKind::Range, "log and ground truth share no sample instant");
}

}  // namespace

EvaluationReport evaluate_serial(std::span<const OccupancyRecord> log, const GroundTruth& truth,
                                 const EvaluationOptions& opt) {
  check_options(opt);
  EvaluationReport report;
  for (const auto& n : split_by_node(log)) {
    check_truth(n, truth);
    const auto grid = sample_grid(n, truth, opt);
    std::vector<std::size_t> cursor(n.spaces.size(), 0);
    for (std::int64_t k = 0; k < grid.count; ++k) {
      const TimestampMs t = grid.first + k * opt.sample_ms;
      Confusion c;
      for (std::size_t s = 0; s < n.spaces.size(); ++s) {
        const auto& ch = n.changes[s];
        while (cursor[s] < ch.size() && ch[cursor[s]].first <= t) ++cursor[s];
        if (cursor[s] == 0) continue;
        auto actual = truth.status_at(n.spaces[s], t);
        if (!actual) continue;
        score(c, ch[cursor[s] - 1].second, *actual);
      }
      if (c.total() == 0) continue;
      ++report.instants;
      report.overall += c;
      report.by_condition[condition(opt, n.node_id, t)] += c;
    }
  }
  finish(report);
  return report;
}

EvaluationReport evaluate(std::span<const OccupancyRecord> log, const GroundTruth& truth,
                          const EvaluationOptions& opt) {
  check_options(opt);
  EvaluationReport report;
  for (const auto& n : split_by_node(log)) {
    check_truth(n, truth);
    const auto grid = sample_grid(n, truth, opt);
    std::vector<Confusion> per_instant(static_cast<std::size_t>(std::max<std::int64_t>(grid.count, 0)));
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < grid.count; ++k) {
      const TimestampMs t = grid.first + k * opt.sample_ms;
      auto& c = per_instant[static_cast<std::size_t>(k)];
      for (std::size_t s = 0; s < n.spaces.size(); ++s) {
        const auto& ch = n.changes[s];
        auto pos = std::upper_bound(ch.begin(), ch.end(), t,
                                    [](TimestampMs x, const auto& e) { return x < e.first; });
        if (pos == ch.begin()) continue;
        auto actual = truth.status_at(n.spaces[s], t);
        if (!actual) continue;
        score(c, std::prev(pos)->second, *actual);
      }
    }
    for (std::int64_t k = 0; k < grid.count; ++k) {
      const auto& c = per_instant[static_cast<std::size_t>(k)];
      if (c.total() == 0) continue;
      ++report.instants;
      report.overall += c;
      report.by_condition[condition(opt, n.node_id, grid.first + k * opt.sample_ms)] += c;
    }
  }
  finish(report);
  return report;
}

std::string evaluation_csv(const EvaluationReport& fused, const EvaluationReport* ssd_only) {
  std::string out =
      "pipeline,condition,instants,samples,correct,accuracy_pct,occupied_as_occupied,vacant_as_occupied,"
      "occupied_as_vacant,vacant_as_vacant\n";
  auto it = std::back_inserter(out);
  auto rows = [&](const char* name, const EvaluationReport& r) {
    auto row = [&](const std::string& cond, const Confusion& c, const std::string& instants) {
      fmt::format_to(it, "{},{},{},{},{},{:.4f},{},{},{},{}\n", name, cond, instants, c.total(), c.correct(),
                     c.accuracy_pct(), c.occupied_as_occupied, c.vacant_as_occupied, c.occupied_as_vacant,
                     c.vacant_as_vacant);
    };
    row("overall", r.overall, std::to_string(r.instants));
    for (const auto& [cond, c] : r.by_condition) row(cond, c, "");
  };
  rows("fused", fused);
  if (ssd_only) rows("ssd_only", *ssd_only);
  return out;
}

ConditionTagger lighting_tagger(std::span<const Scenario> scenarios) {
  std::map<std::string, std::vector<LightingEvent>> events;
  for (const auto& s : scenarios) {
    auto& e = events[s.node_id];
    e.insert(e.end(), s.lighting.begin(), s.lighting.end());
  }
  return [events = std::move(events)](const std::string& node, TimestampMs ts) -> std::string {
    auto it = events.find(node);
    if (it != events.end()) {
      for (const auto& e : it->second) {
        if (e.active(ts)) return "lighting";
      }
    }
    return "clear";
  };
}

std::vector<PatternRow> occupancy_pattern(std::span<const OccupancyRecord> log, TimestampMs bucket_ms) {
  if (bucket_ms <= 0) throw Error(ErrorKind::Range, "bucket length must be > 0");
  const auto nodes = split_by_node(log);
  if (nodes.empty()) throw Error(ErrorKind::Range, "occupancy log has no final records");
  std::vector<PatternRow> rows;
  for (const auto& n : nodes) {
    const TimestampMs s = bucket_ms;
    TimestampMs b = n.first_ts >= 0 ? (n.first_ts + s - 1) / s * s : -((-n.first_ts) / s * s);
    std::vector<std::size_t> cursor(n.spaces.size(), 0);
    for (; b <= n.last_ts; b += s) {
      PatternRow row{b, n.node_id, 0, n.spaces.size()};
      for (std::size_t k = 0; k < n.spaces.size(); ++k) {
        const auto& ch = n.changes[k];
        while (cursor[k] < ch.size() && ch[cursor[k]].first <= b) ++cursor[k];
        if (cursor[k] > 0 && ch[cursor[k] - 1].second == SpaceStatus::Occupied) ++row.occupied;
      }
      rows.push_back(std::move(row));
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const PatternRow& a, const PatternRow& b) {
    return a.bucket_start != b.bucket_start ? a.bucket_start < b.bucket_start : a.node_id < b.node_id;
  });
  return rows;
}

std::string pattern_csv(std::span<const PatternRow> rows) {
  std::string out = "bucket_start_ms,node_id,occupied_count,total_spaces\n";
  auto it = std::back_inserter(out);
  for (const auto& r : rows) fmt::format_to(it, "{},{},{},{}\n", r.bucket_start, r.node_id, r.occupied, r.total_spaces);
  return out;
}

}  // namespace parksense
