#pragma once

#include <optional>
#include <string>
#include <vector>

#include "parksense/config.hpp"
#include "parksense/evaluation.hpp"
#include "parksense/scenario.hpp"
#include "parksense/server.hpp"
#include "parksense/space_map.hpp"

namespace parksense {

/// Runs every scenario's edge node and merges their messages into one wire
/// log ordered by (ts, scenario order).
std::string simulate_wire(const std::vector<Scenario>& scenarios, const SpaceMap& spaces,
                          const PipelineConfig& cfg, std::optional<std::uint64_t> seed_override = std::nullopt);

struct SimulationArtifacts {
  std::string wire_log;
  GroundTruth truth;
  ReplayResult server;
  EvaluationReport fused;
  EvaluationReport ssd_only;
};

/// Edge simulation, server replay of the produced bytes, and evaluation.
SimulationArtifacts simulate(const std::vector<Scenario>& scenarios, const SpaceMap& spaces,
                             const PipelineConfig& cfg, std::optional<std::uint64_t> seed_override,
                             TimestampMs sample_ms);

}  // namespace parksense
