// Times serial vs OpenMP replay and evaluation over the 24 h demo.

#include <chrono>
#include <cstdio>
#include <string>

#include <omp.h>

#include "parksense/evaluation.hpp"
#include "parksense/run.hpp"
#include "parksense/server.hpp"

using namespace parksense;

namespace {

template <typename F>
double best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int k = 0; k < reps; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string data = argc > 1 ? argv[1] : PARKSENSE_DATA_DIR;
  const int reps = argc > 2 ? std::stoi(argv[2]) : 3;
  const auto spaces = SpaceMap::load(data + "/spaces/garage.txt");
  const PipelineConfig cfg;
  const std::vector<Scenario> scns{Scenario::load(data + "/scenarios/demo_n6.scn"),
                                   Scenario::load(data + "/scenarios/demo_n3.scn")};
  const auto wire = simulate_wire(scns, spaces, cfg);
  GroundTruth truth;
  for (const auto& s : scns) truth.merge(GroundTruth::from_scenario(s, spaces.layout(s.node_id)));

  ReplayResult r;
  const double serial = best_of(reps, [&] { r = replay_serial(wire, spaces, cfg); });
  const double parallel = best_of(reps, [&] { r = replay_parallel(wire, spaces, cfg); });
  EvaluationOptions opt;
  opt.sample_ms = 1000;
  EvaluationReport e;
  const double eval_serial = best_of(reps, [&] { e = evaluate_serial(r.log, truth, opt); });
  const double eval_parallel = best_of(reps, [&] { e = evaluate(r.log, truth, opt); });

  std::printf("threads           %d\n", omp_get_max_threads());
  std::printf("wire bytes        %zu\n", wire.size());
  std::printf("detection records %llu\n", static_cast<unsigned long long>(r.detection_records));
  std::printf("replay_serial     %.3f s  (%.0f records/s)\n", serial, r.detection_records / serial);
  std::printf("replay_parallel   %.3f s  (%.0f records/s)\n", parallel, r.detection_records / parallel);
  std::printf("evaluate_serial   %.3f s  (%llu instants at 1 s)\n", eval_serial,
              static_cast<unsigned long long>(e.instants));
  std::printf("evaluate          %.3f s\n", eval_parallel);
  return 0;
}
