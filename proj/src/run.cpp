#include "parksense/run.hpp"

#include <memory>

#include "parksense/edge_sim.hpp"

namespace parksense {

std::string simulate_wire(const std::vector<Scenario>& scenarios, const SpaceMap& spaces, const PipelineConfig& cfg,
                          std::optional<std::uint64_t> seed_override) {
  cfg.validate();
  std::vector<std::unique_ptr<EdgeNode>> nodes;
  for (const auto& scn : scenarios) {
    nodes.push_back(std::make_unique<EdgeNode>(scn, spaces.layout(scn.node_id), cfg, seed_override));
  }
  std::string out;
  while (true) {
    EdgeNode* next = nullptr;
    for (auto& n : nodes) {
      if (!n->done() && (!next || n->peek_ts() < next->peek_ts())) next = n.get();
    }
    if (!next) break;
    encode(*next->next(), out);
  }
  return out;
}

SimulationArtifacts simulate(const std::vector<Scenario>& scenarios, const SpaceMap& spaces, const PipelineConfig& cfg,
                             std::optional<std::uint64_t> seed_override, TimestampMs sample_ms) {
  SimulationArtifacts a;
  a.wire_log = simulate_wire(scenarios, spaces, cfg, seed_override);
  for (const auto& scn : scenarios) a.truth.merge(GroundTruth::from_scenario(scn, spaces.layout(scn.node_id)));
  a.server = replay_parallel(a.wire_log, spaces, cfg);
  EvaluationOptions opt;
  opt.sample_ms = sample_ms;
  opt.tagger = lighting_tagger(scenarios);
  a.fused = evaluate(a.server.log, a.truth, opt);
  a.ssd_only = evaluate(a.server.ssd_only_log, a.truth, opt);
  return a;
}

}  // namespace parksense
