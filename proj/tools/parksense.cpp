// parksense: run scenarios end to end, replay wire logs, report occupancy.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "parksense/error.hpp"
#include "parksense/evaluation.hpp"
#include "parksense/occupancy_log.hpp"
#include "parksense/run.hpp"
#include "parksense/scenario_builder.hpp"
#include "parksense/server.hpp"
#include "parksense/text.hpp"

namespace fs = std::filesystem;
using namespace parksense;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kDataError = 2;

PipelineConfig load_config(const std::string& path) {
  return path.empty() ? PipelineConfig{} : PipelineConfig::load(path);
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, fmt::format("cannot write '{}'", path.string()));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, fmt::format("write failed for '{}'", path.string()));
}

void make_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
}

// Serial replay that keeps tracker events, for the debug log.
void write_track_log(const fs::path& path, std::string_view wire, const SpaceMap& spaces, const PipelineConfig& cfg) {
  Server server(spaces, cfg);
  for (const auto& id : spaces.node_ids()) server.pipeline(id).keep_track_events(true);
  WireReader reader(wire, DecodeMode::TolerantTail);
  while (auto msg = reader.next()) server.ingest(*msg, reader.last_message_bytes());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, fmt::format("cannot write '{}'", path.string()));
  out << "ts,node_id,track_id,event,x1,y1,x2,y2\n";
  for (const auto& [id, p] : server.pipelines()) {
    for (const auto& e : p.track_events()) write_track_event_csv(out, id, e);
  }
}

struct SimulateArgs {
  std::vector<std::string> scenarios;
  std::string spaces;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  double sample_s = 60.0;
  std::optional<double> bucket_s;
  std::string track_log;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto spaces = SpaceMap::load(a.spaces);
  const auto cfg = load_config(a.config);
  std::vector<Scenario> scenarios;
  for (const auto& p : a.scenarios) scenarios.push_back(Scenario::load(p));
  const auto sample_ms = static_cast<TimestampMs>(a.sample_s * 1000.0);
  const auto run = simulate(scenarios, spaces, cfg, a.seed, sample_ms);

  const fs::path out(a.out);
  make_out_dir(out);
  write_file(out / "wire.log", run.wire_log);
  write_file(out / "ground_truth.csv", run.truth.to_csv());
  write_file(out / "occupancy.csv", occupancy_csv(run.server.log));
  write_file(out / "volume_report.csv", volume_csv(run.server.ledger, cfg));
  write_file(out / "evaluation_report.csv", evaluation_csv(run.fused, &run.ssd_only));
  if (a.bucket_s) {
    const auto rows = occupancy_pattern(run.server.log, static_cast<TimestampMs>(*a.bucket_s * 1000.0));
    write_file(out / "occupancy_pattern.csv", pattern_csv(rows));
  }
  if (!a.track_log.empty()) write_track_log(a.track_log, run.wire_log, spaces, cfg);
  for (const auto& d : run.server.diagnostics) std::cerr << d << '\n';
  std::cout << fmt::format("fused accuracy {:.2f}% (SSD only {:.2f}%) over {} instants\n",
                           run.fused.overall.accuracy_pct(), run.ssd_only.overall.accuracy_pct(), run.fused.instants);
  return kOk;
}

struct ReplayArgs {
  std::string log;
  std::string spaces;
  std::string config;
  std::string out;
  std::string truth;
  std::vector<std::string> scenarios;
  double sample_s = 60.0;
  std::string track_log;
};

int cmd_replay(const ReplayArgs& a) {
  const auto spaces = SpaceMap::load(a.spaces);
  const auto cfg = load_config(a.config);
  const auto wire = text::read_file(a.log);
  ReplayResult run;
  try {
    run = replay_parallel(wire, spaces, cfg, DecodeMode::TolerantTail);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Parse) throw;
    throw Error(ErrorKind::Parse, fmt::format("{}: {}", a.log, e.what()), e.line());
  }
  const fs::path out(a.out);
  make_out_dir(out);
  write_file(out / "occupancy.csv", occupancy_csv(run.log));
  write_file(out / "volume_report.csv", volume_csv(run.ledger, cfg));
  if (!a.truth.empty()) {
    const auto truth = GroundTruth::load_csv(a.truth);
    EvaluationOptions opt;
    opt.sample_ms = static_cast<TimestampMs>(a.sample_s * 1000.0);
    std::vector<Scenario> scenarios;
    for (const auto& p : a.scenarios) scenarios.push_back(Scenario::load(p));
    if (!scenarios.empty()) opt.tagger = lighting_tagger(scenarios);
    const auto fused = evaluate(run.log, truth, opt);
    const auto ssd = evaluate(run.ssd_only_log, truth, opt);
    write_file(out / "evaluation_report.csv", evaluation_csv(fused, &ssd));
  }
  if (!a.track_log.empty()) write_track_log(a.track_log, wire, spaces, cfg);
  for (const auto& d : run.diagnostics) std::cerr << d << '\n';
  if (run.truncated) std::cerr << a.log << ": incomplete final record ignored\n";
  std::cout << fmt::format("replayed {} messages, {} detection records\n", run.messages, run.detection_records);
  return kOk;
}

int cmd_report(const std::string& occupancy, double bucket_s, const std::string& out) {
  const auto log = load_occupancy_csv(occupancy);
  if (log.empty()) throw Error(ErrorKind::Range, fmt::format("{}: occupancy log is empty", occupancy));
  const auto rows = occupancy_pattern(log, static_cast<TimestampMs>(bucket_s * 1000.0));
  const auto csv = pattern_csv(rows);
  if (out.empty() || out == "-") {
    std::cout << csv;
  } else {
    write_file(out, csv);
  }
  return kOk;
}

struct GenerateArgs {
  std::string spaces;
  std::string node;
  std::string out;
  double duration_s = 86400.0;
  std::uint64_t seed = 1;
  double peak_per_hour = 8.0;
  double initial = 0.5;
  bool flat = false;
  std::vector<std::string> lighting;
  std::vector<std::string> reserve;
  std::vector<std::string> shapes;
  std::vector<std::string> quiet;
  std::string extra;
};

int cmd_generate(const GenerateArgs& a) {
  const auto spaces = SpaceMap::load(a.spaces);
  const auto& layout = spaces.layout(a.node);
  BuilderOptions opt;
  opt.duration_ms = static_cast<TimestampMs>(a.duration_s * 1000.0);
  opt.seed = a.seed;
  opt.arrivals_per_hour = a.flat ? std::vector<double>(24, a.peak_per_hour) : weekday_profile(a.peak_per_hour);
  opt.initial_occupancy = a.initial;
  opt.reserved_spaces = a.reserve;
  for (const auto& l : a.lighting) {
    const auto f = text::split(l, ':');
    auto bad = [&]() { return Error(ErrorKind::Config, fmt::format("--lighting '{}' expects start_s:end_s:recall:score", l)); };
    if (f.size() != 4) throw bad();
    double v[4];
    for (int k = 0; k < 4; ++k) {
      auto d = text::to_double(f[k]);
      if (!d) throw bad();
      v[k] = *d;
    }
    opt.lighting.push_back({static_cast<TimestampMs>(v[0] * 1000.0), static_cast<TimestampMs>(v[1] * 1000.0), v[2], v[3]});
  }
  for (const auto& q : a.quiet) {
    const auto f = text::split(q, ':');
    auto lo = f.size() == 2 ? text::to_double(f[0]) : std::nullopt;
    auto hi = f.size() == 2 ? text::to_double(f[1]) : std::nullopt;
    if (!lo || !hi) throw Error(ErrorKind::Config, fmt::format("--quiet '{}' expects start_s:end_s", q));
    opt.quiet.emplace_back(static_cast<TimestampMs>(*lo * 1000.0), static_cast<TimestampMs>(*hi * 1000.0));
  }
  if (!a.shapes.empty()) {
    opt.shapes.clear();
    for (const auto& s : a.shapes) {
      const auto f = text::split(s, ':');
      auto w = f.size() == 3 ? text::to_double(f[1]) : std::nullopt;
      auto h = f.size() == 3 ? text::to_double(f[2]) : std::nullopt;
      if (!w || !h) throw Error(ErrorKind::Config, fmt::format("--shape '{}' expects class:w:h", s));
      opt.shapes.push_back({std::string(f[0]), *w, *h});
    }
  }
  auto scn = build_scenario(a.node, layout, PipelineConfig{}.emulator, opt);
  std::string body = scn.to_text();
  if (!a.extra.empty()) {
    body += text::read_file(a.extra);
    scn = Scenario::parse(body, a.out.empty() ? "<generated>" : a.out);
    scn.validate(layout);
  }
  if (a.out.empty() || a.out == "-") {
    std::cout << body;
  } else {
    write_file(a.out, body);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parking occupancy pipeline: edge simulation, server replay and reports"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "run scenarios through edge nodes and the server");
  simulate_cmd->add_option("--scenario", sim.scenarios, "scenario file (repeatable, one per node)")->required();
  simulate_cmd->add_option("--spaces", sim.spaces, "space map file")->required();
  simulate_cmd->add_option("--config", sim.config, "key=value pipeline config");
  simulate_cmd->add_option("--out", sim.out, "output directory")->required();
  simulate_cmd->add_option("--seed", sim.seed, "override every scenario's seed");
  simulate_cmd->add_option("--sample-s", sim.sample_s, "evaluation sample interval in seconds")->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--bucket-s", sim.bucket_s, "also write an occupancy pattern with this bucket")
      ->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--track-log", sim.track_log, "write tracker events CSV here");

  ReplayArgs rep;
  auto* replay_cmd = app.add_subcommand("replay", "replay a wire log through the server");
  replay_cmd->add_option("--log", rep.log, "wire log")->required();
  replay_cmd->add_option("--spaces", rep.spaces, "space map file")->required();
  replay_cmd->add_option("--config", rep.config, "key=value pipeline config");
  replay_cmd->add_option("--out", rep.out, "output directory")->required();
  replay_cmd->add_option("--truth", rep.truth, "ground-truth CSV; adds an evaluation report");
  replay_cmd->add_option("--scenario", rep.scenarios, "scenario files, for lighting tags in the evaluation");
  replay_cmd->add_option("--sample-s", rep.sample_s, "evaluation sample interval in seconds")->check(CLI::PositiveNumber);
  replay_cmd->add_option("--track-log", rep.track_log, "write tracker events CSV here");

  std::string occupancy;
  double bucket_s = 600.0;
  std::string report_out;
  auto* report_cmd = app.add_subcommand("report", "bucketed occupied counts per node");
  report_cmd->add_option("--occupancy", occupancy, "occupancy CSV")->required();
  report_cmd->add_option("--bucket-s", bucket_s, "bucket length in seconds")->check(CLI::PositiveNumber);
  report_cmd->add_option("--out", report_out, "output CSV (default stdout)");

  GenerateArgs gen;
  auto* generate_cmd = app.add_subcommand("generate", "build a randomized scenario for one node");
  generate_cmd->add_option("--spaces", gen.spaces, "space map file")->required();
  generate_cmd->add_option("--node", gen.node, "node id")->required();
  generate_cmd->add_option("--out", gen.out, "scenario file (default stdout)");
  generate_cmd->add_option("--duration-s", gen.duration_s, "scenario length")->check(CLI::PositiveNumber);
  generate_cmd->add_option("--seed", gen.seed, "scenario seed");
  generate_cmd->add_option("--peak-per-hour", gen.peak_per_hour, "arrivals per hour at the daily peak")
      ->check(CLI::NonNegativeNumber);
  generate_cmd->add_flag("--flat", gen.flat, "same arrival rate every hour instead of a weekday curve");
  generate_cmd->add_option("--initial", gen.initial, "fraction of spaces occupied at t=0")->check(CLI::Range(0.0, 1.0));
  generate_cmd->add_option("--lighting", gen.lighting, "start_s:end_s:recall_mult:score_mult (repeatable)");
  generate_cmd->add_option("--reserve", gen.reserve, "space left to scripted vehicles (repeatable)");
  generate_cmd->add_option("--shape", gen.shapes, "class:w:h vehicle body (repeatable)");
  generate_cmd->add_option("--quiet", gen.quiet, "start_s:end_s window with no generated movement (repeatable)");
  generate_cmd->add_option("--extra", gen.extra, "file of V/L records appended to the result");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate_cmd) return cmd_simulate(sim);
    if (*replay_cmd) return cmd_replay(rep);
    if (*report_cmd) return cmd_report(occupancy, bucket_s, report_out);
    if (*generate_cmd) return cmd_generate(gen);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}
