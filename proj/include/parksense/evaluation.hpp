#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "parksense/model.hpp"
#include "parksense/scenario.hpp"
#include "parksense/space_map.hpp"

namespace parksense {

/// Per-space status change points, keyed by space_id (unique across nodes).
class GroundTruth {
 public:
  struct Change {
    TimestampMs ts;
    SpaceStatus status;
  };

  static GroundTruth from_scenario(const Scenario& scenario, const NodeLayout& layout);
  /// CSV `ts_ms,space_id,status`, header optional.
  static GroundTruth parse_csv(std::string_view text);
  static GroundTruth load_csv(const std::filesystem::path& path);

  void merge(const GroundTruth& other);
  std::string to_csv() const;

  /// Status at `ts`; nullopt before the first change point or for unknown ids.
  std::optional<SpaceStatus> status_at(std::string_view space_id, TimestampMs ts) const;
  bool has_space(std::string_view space_id) const;
  TimestampMs end_ts() const { return end_ts_; }

 private:
  std::map<std::string, std::vector<Change>, std::less<>> changes_;
  TimestampMs end_ts_ = 0;
};

struct Confusion {
  std::uint64_t occupied_as_occupied = 0;
  std::uint64_t vacant_as_occupied = 0;
  std::uint64_t occupied_as_vacant = 0;
  std::uint64_t vacant_as_vacant = 0;

  std::uint64_t total() const;
  std::uint64_t correct() const;
  double accuracy_pct() const;
  Confusion& operator+=(const Confusion& other);
};

struct EvaluationReport {
  Confusion overall;
  std::map<std::string, Confusion> by_condition;
  std::uint64_t instants = 0;
};

using ConditionTagger = std::function<std::string(const std::string& node_id, TimestampMs ts)>;

struct EvaluationOptions {
  TimestampMs sample_ms = 60000;
  std::optional<TimestampMs> window_begin;  // inclusive
  std::optional<TimestampMs> window_end;    // exclusive
  ConditionTagger tagger;                   // empty: every instant is "all"
};

/// Samples every node's final statuses on a sample_ms grid over the span it
/// shares with the ground truth and scores them with
/// accuracy = correct / (spaces x instants). Throws ErrorKind::Range when no
/// instant qualifies. BG audit records are ignored.
EvaluationReport evaluate(std::span<const OccupancyRecord> log, const GroundTruth& truth,
                          const EvaluationOptions& options);
/// Single-threaded reference for evaluate().
EvaluationReport evaluate_serial(std::span<const OccupancyRecord> log, const GroundTruth& truth,
                                 const EvaluationOptions& options);

std::string evaluation_csv(const EvaluationReport& fused, const EvaluationReport* ssd_only);

/// Tags instants "lighting" inside a node's lighting events, "clear" otherwise.
ConditionTagger lighting_tagger(std::span<const Scenario> scenarios);

struct PatternRow {
  TimestampMs bucket_start = 0;
  std::string node_id;
  std::size_t occupied = 0;
  std::size_t total_spaces = 0;

  bool operator==(const PatternRow&) const = default;
};

/// Occupied count per node at each bucket start (status of the latest final
/// record at or before the bucket start). Buckets are aligned to multiples
/// of bucket_ms, rows ordered by bucket then node. Throws ErrorKind::Range for
/// a log with no final records.
std::vector<PatternRow> occupancy_pattern(std::span<const OccupancyRecord> log, TimestampMs bucket_ms);
std::string pattern_csv(std::span<const PatternRow> rows);

}  // namespace parksense
