#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "parksense/config.hpp"
#include "parksense/scenario.hpp"
#include "parksense/space_map.hpp"
#include "parksense/wire.hpp"

namespace parksense {

struct VehiclePose {
  std::size_t vehicle = 0;  // index into Scenario::vehicles
  BoundingBox box;          // unclipped; may extend past the image
  bool moving = false;
};

struct Scene {
  TimestampMs ts = 0;
  std::vector<VehiclePose> vehicles;
};

/// Scripted kinematics. Each vehicle enters at the left edge on a lane below
/// the lowest space row, drives to the point under its space, optionally
/// pauses, then turns into the space. Departure reverses into the lane and
/// leaves at the right edge.
class World {
 public:
  World(const Scenario& scenario, const NodeLayout& layout, const EmulatorParams& params);

  /// Vehicle poses at `ts`; moving iff displaced more than motion_eps_px
  /// since ts - bg_period_ms. Throws ErrorKind::Range outside [0, duration].
  Scene step(TimestampMs ts) const;

  /// Occupied iff some vehicle has park_ms <= ts < depart_ms on that space.
  StatusMap ground_truth_at(TimestampMs ts) const;

  std::optional<Point> position(std::size_t vehicle, double ts) const;
  /// Departure leg duration in ms, derived from the arrival speed.
  double departure_duration_ms(std::size_t vehicle) const;

  const Scenario& scenario() const { return scenario_; }
  const NodeLayout& layout() const { return layout_; }

 private:
  struct Path {
    Point entry, lane, stall, exit;
    double leg1_ms = 0.0;  // entry -> lane
    double leg2_ms = 0.0;  // lane -> stall
    double pause_ms = 0.0;
    double depart_ms = 0.0;  // stall -> lane -> exit
    double depart_leg1_frac = 0.0;
    std::size_t space = 0;
  };

  Scenario scenario_;
  NodeLayout layout_;
  EmulatorParams params_;
  std::vector<Path> paths_;
};

/// Free-function form of World::step.
Scene world_step(const World& world, TimestampMs ts);
StatusMap ground_truth_at(const World& world, TimestampMs ts);

struct LightingCondition {
  double recall_mult = 1.0;
  double score_mult = 1.0;
};

/// SSD-like and BG-like detector emulation for one node. Each detector draws
/// from its own seeded stream.
class DetectorEmulator {
 public:
  DetectorEmulator(const World& world, const EmulatorParams& params, std::uint64_t seed);

  /// Visible, unoccluded vehicles detected with probability
  /// recall(vehicle) * recall_mult; boxes jittered and rounded to pixels;
  /// scores scaled, clamped and quantized to 1e-4; Poisson false positives.
  std::vector<Detection> ssd(const Scene& scene, LightingCondition lighting, std::uint64_t frame_seq);

  /// One dilated blob per moving visible vehicle, blobs within merge distance
  /// fused into their hull, plus Poisson noise blobs. Parked vehicles are
  /// never reported.
  std::vector<Detection> bg(const Scene& scene, std::uint64_t frame_seq);

  double vehicle_recall(std::size_t vehicle) const { return recall_[vehicle]; }

 private:
  const World& world_;
  EmulatorParams params_;
  std::mt19937_64 ssd_rng_;
  std::mt19937_64 bg_rng_;
  std::vector<double> recall_;
};

/// Drives a World and its emulators, yielding the node's wire messages in
/// timestamp order: SSD frames, BG frames and periodic snapshot notices.
class EdgeNode {
 public:
  EdgeNode(const Scenario& scenario, const NodeLayout& layout, const PipelineConfig& cfg,
           std::optional<std::uint64_t> seed_override = std::nullopt);
  EdgeNode(const EdgeNode&) = delete;
  EdgeNode& operator=(const EdgeNode&) = delete;

  std::optional<WireMessage> next();
  TimestampMs peek_ts() const;
  bool done() const;

  const World& world() const { return world_; }

 private:
  PipelineConfig cfg_;
  World world_;
  DetectorEmulator emulator_;
  TimestampMs next_ssd_;
  TimestampMs next_bg_;
  TimestampMs next_snapshot_;
  std::uint64_t frame_seq_ = 0;
};

std::uint64_t mix_seed(std::uint64_t seed, std::string_view salt);

}  // namespace parksense
