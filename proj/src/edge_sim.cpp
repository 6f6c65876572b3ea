#include "parksense/edge_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "parksense/error.hpp"

namespace parksense {

namespace {

double distance(Point a, Point b) { return std::hypot(b.x - a.x, b.y - a.y); }

Point lerp(Point a, Point b, double f) { return {a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f}; }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double quantize_score(double s) { return std::round(std::clamp(s, 0.0, 1.0) * 10000.0) / 10000.0; }

// Rounds to whole pixels inside the image; nullopt if nothing is left.
std::optional<BoundingBox> to_pixels(const BoundingBox& b, double w, double h, bool outward) {
  auto clipped = clip(b, w, h);
  if (!clipped) return std::nullopt;
  BoundingBox r;
  if (outward) {
    r = {std::floor(clipped->x1), std::floor(clipped->y1), std::ceil(clipped->x2), std::ceil(clipped->y2)};
  } else {
    r = {std::round(clipped->x1), std::round(clipped->y1), std::round(clipped->x2), std::round(clipped->y2)};
  }
  if (!r.has_area()) return std::nullopt;
  return r;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::string_view salt) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : salt) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ splitmix64(h));
}

World::World(const Scenario& scenario, const NodeLayout& layout, const EmulatorParams& params)
    : scenario_(scenario), layout_(layout), params_(params) {
  scenario_.validate(layout_);
  const double aisle_y = layout_.lowest_edge() + params_.aisle_offset_px;
  paths_.reserve(scenario_.vehicles.size());
  for (const auto& v : scenario_.vehicles) {
    Path p;
    p.space = *layout_.index_of(v.space_id);
    const auto stall = layout_.spaces[p.space].rect.center();
    p.stall = stall;
    p.lane = {stall.x, aisle_y};
    p.entry = {-v.width / 2.0, aisle_y};
    p.exit = {scenario_.img_w + v.width / 2.0, aisle_y};
    p.pause_ms = v.pause_s * 1000.0;
    const double d1 = distance(p.entry, p.lane);
    const double d2 = distance(p.lane, p.stall);
    const double d3 = distance(p.lane, p.exit);
    const double moving = static_cast<double>(v.park_ms - v.arrive_ms) - p.pause_ms;
    const double total = d1 + d2;
    p.leg1_ms = total > 0 ? moving * d1 / total : 0.0;
    p.leg2_ms = moving - p.leg1_ms;
    p.depart_ms = total > 0 ? std::max(moving, moving * (d2 + d3) / total) : moving;
    p.depart_leg1_frac = (d2 + d3) > 0 ? d2 / (d2 + d3) : 0.0;
    paths_.push_back(p);
  }
}

std::optional<Point> World::position(std::size_t vehicle, double ts) const {
  const auto& v = scenario_.vehicles[vehicle];
  const auto& p = paths_[vehicle];
  const double arrive = static_cast<double>(v.arrive_ms);
  if (ts < arrive) return std::nullopt;
  if (v.depart_ms && ts >= static_cast<double>(*v.depart_ms)) {
    const double t = ts - static_cast<double>(*v.depart_ms);
    const double leg1 = p.depart_ms * p.depart_leg1_frac;
    if (t < leg1) return lerp(p.stall, p.lane, t / leg1);
    if (t < p.depart_ms) return lerp(p.lane, p.exit, (t - leg1) / (p.depart_ms - leg1));
    return std::nullopt;
  }
  const double t = ts - arrive;
  if (t < p.leg1_ms) return lerp(p.entry, p.lane, t / p.leg1_ms);
  if (t < p.leg1_ms + p.pause_ms) return p.lane;
  const double t2 = t - p.leg1_ms - p.pause_ms;
  if (t2 < p.leg2_ms) return lerp(p.lane, p.stall, t2 / p.leg2_ms);
  return p.stall;
}

double World::departure_duration_ms(std::size_t vehicle) const { return paths_[vehicle].depart_ms; }

Scene World::step(TimestampMs ts) const {
  if (ts < 0 || ts > scenario_.duration_ms) {
    throw Error(ErrorKind::Range, fmt::format("ts {} outside scenario [0, {}]", ts, scenario_.duration_ms));
  }
  Scene scene;
  scene.ts = ts;
  const double t = static_cast<double>(ts);
  for (std::size_t i = 0; i < scenario_.vehicles.size(); ++i) {
    auto pos = position(i, t);
    if (!pos) continue;
    const auto& v = scenario_.vehicles[i];
    VehiclePose pose;
    pose.vehicle = i;
    pose.box = box_from_center(*pos, v.width, v.height);
    auto before = position(i, t - static_cast<double>(params_.bg_period_ms));
    pose.moving = !before || distance(*before, *pos) > params_.motion_eps_px;
    scene.vehicles.push_back(pose);
  }
  return scene;
}

StatusMap World::ground_truth_at(TimestampMs ts) const {
  StatusMap out(layout_.size(), SpaceStatus::Vacant);
  for (std::size_t i = 0; i < scenario_.vehicles.size(); ++i) {
    const auto& v = scenario_.vehicles[i];
    if (v.park_ms <= ts && (!v.depart_ms || ts < *v.depart_ms)) out[paths_[i].space] = SpaceStatus::Occupied;
  }
  return out;
}

Scene world_step(const World& world, TimestampMs ts) { return world.step(ts); }

StatusMap ground_truth_at(const World& world, TimestampMs ts) { return world.ground_truth_at(ts); }

DetectorEmulator::DetectorEmulator(const World& world, const EmulatorParams& params, std::uint64_t seed)
    : world_(world),
      params_(params),
      ssd_rng_(mix_seed(seed, "ssd:" + world.scenario().node_id)),
      bg_rng_(mix_seed(seed, "bg:" + world.scenario().node_id)) {
  for (const auto& v : world_.scenario().vehicles) {
    std::mt19937_64 rng(mix_seed(seed, "recall:" + v.vehicle_id));
    recall_.push_back(uniform(rng, params_.ssd_recall_lo, std::nextafter(params_.ssd_recall_hi, 2.0)));
  }
}

std::vector<Detection> DetectorEmulator::ssd(const Scene& scene, LightingCondition lighting,
                                             std::uint64_t frame_seq) {
  const auto& scn = world_.scenario();
  const double w = scn.img_w;
  const double h = scn.img_h;
  std::vector<Detection> out;
  auto emit = [&](const std::string& label, const BoundingBox& box, double score) {
    Detection d;
    d.node_id = scn.node_id;
    d.frame_seq = frame_seq;
    d.ts = scene.ts;
    d.kind = DetectorKind::Ssd;
    d.class_label = label;
    d.bbox = box;
    d.score = score;
    out.push_back(std::move(d));
  };
  for (const auto& pose : scene.vehicles) {
    const auto visible = clip(pose.box, w, h);
    if (!visible || visible->area() < params_.ssd_min_visible * pose.box.area()) continue;
    bool hidden = false;
    for (const auto& other : scene.vehicles) {
      if (other.vehicle == pose.vehicle || other.box.y2 <= pose.box.y2) continue;
      if (coverage(pose.box, other.box) >= params_.occlude_frac) {
        hidden = true;
        break;
      }
    }
    if (hidden) continue;
    // Draws happen in a fixed order so streams stay aligned across runs.
    const double p = recall_[pose.vehicle] * lighting.recall_mult;
    const double u = uniform(ssd_rng_, 0.0, 1.0);
    const double j = params_.ssd_jitter_px;
    BoundingBox jittered = pose.box;
    if (j > 0) {
      jittered.x1 += uniform(ssd_rng_, -j, j);
      jittered.y1 += uniform(ssd_rng_, -j, j);
      jittered.x2 += uniform(ssd_rng_, -j, j);
      jittered.y2 += uniform(ssd_rng_, -j, j);
    }
    const double score = quantize_score(uniform(ssd_rng_, params_.ssd_score_lo, params_.ssd_score_hi) *
                                        lighting.score_mult);
    if (u >= p) continue;
    auto box = to_pixels(jittered, w, h, false);
    if (!box) continue;
    emit(scn.vehicles[pose.vehicle].vehicle_class, *box, score);
  }
  if (params_.ssd_fp_rate > 0) {
    const int n = std::poisson_distribution<int>(params_.ssd_fp_rate)(ssd_rng_);
    for (int k = 0; k < n; ++k) {
      const double bw = uniform(ssd_rng_, 60.0, 140.0);
      const double bh = uniform(ssd_rng_, 50.0, 120.0);
      const double x = uniform(ssd_rng_, 0.0, std::max(1.0, w - bw));
      const double y = uniform(ssd_rng_, 0.0, std::max(1.0, h - bh));
      const double score = quantize_score(uniform(ssd_rng_, params_.ssd_score_lo, params_.ssd_score_hi) *
                                          lighting.score_mult);
      auto box = to_pixels({x, y, x + bw, y + bh}, w, h, false);
      if (box) emit("car", *box, score);
    }
  }
  return out;
}

std::vector<Detection> DetectorEmulator::bg(const Scene& scene, std::uint64_t frame_seq) {
  const auto& scn = world_.scenario();
  const double w = scn.img_w;
  const double h = scn.img_h;
  std::vector<BoundingBox> blobs;
  for (const auto& pose : scene.vehicles) {
    if (!pose.moving) continue;
    const auto visible = clip(pose.box, w, h);
    if (!visible || visible->area() < params_.bg_min_visible * pose.box.area()) continue;
    auto blob = to_pixels(dilate(pose.box, params_.bg_blob_margin_px), w, h, true);
    if (blob) blobs.push_back(*blob);
  }

  // Union-find over blobs closer than the merge distance.
  std::vector<std::size_t> parent(blobs.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    for (std::size_t j = i + 1; j < blobs.size(); ++j) {
      if (rect_distance(blobs[i], blobs[j]) <= params_.bg_merge_dist_px) parent[find(j)] = find(i);
    }
  }
  std::vector<std::optional<BoundingBox>> merged(blobs.size());
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    auto& m = merged[find(i)];
    m = m ? hull(*m, blobs[i]) : blobs[i];
  }

  std::vector<Detection> out;
  auto emit = [&](const BoundingBox& box) {
    Detection d;
    d.node_id = scn.node_id;
    d.frame_seq = frame_seq;
    d.ts = scene.ts;
    d.kind = DetectorKind::Bg;
    d.class_label = std::string(kBlobLabel);
    d.bbox = box;
    d.score = 1.0;
    out.push_back(std::move(d));
  };
  for (const auto& m : merged) {
    if (m) emit(*m);
  }
  if (params_.bg_noise_rate > 0) {
    const int n = std::poisson_distribution<int>(params_.bg_noise_rate)(bg_rng_);
    for (int k = 0; k < n; ++k) {
      const double bw = uniform(bg_rng_, 10.0, 60.0);
      const double bh = uniform(bg_rng_, 10.0, 60.0);
      const double x = uniform(bg_rng_, 0.0, std::max(1.0, w - bw));
      const double y = uniform(bg_rng_, 0.0, std::max(1.0, h - bh));
      auto box = to_pixels({x, y, x + bw, y + bh}, w, h, true);
      if (box) emit(*box);
    }
  }
  return out;
}

EdgeNode::EdgeNode(const Scenario& scenario, const NodeLayout& layout, const PipelineConfig& cfg,
                   std::optional<std::uint64_t> seed_override)
    : cfg_(cfg),
      world_(scenario, layout, cfg.emulator),
      emulator_(world_, cfg.emulator, seed_override.value_or(scenario.seed)),
      next_ssd_(0),
      next_bg_(cfg.emulator.bg_phase_ms),
      next_snapshot_(cfg.emulator.snapshot_phase_ms) {}

TimestampMs EdgeNode::peek_ts() const { return std::min({next_ssd_, next_bg_, next_snapshot_}); }

bool EdgeNode::done() const { return peek_ts() > world_.scenario().duration_ms; }

std::optional<WireMessage> EdgeNode::next() {
  if (done()) return std::nullopt;
  const auto& scn = world_.scenario();
  const TimestampMs ts = peek_ts();
  if (ts == next_snapshot_) {
    next_snapshot_ += cfg_.snapshot_interval_ms();
    return SnapshotNotice{scn.node_id, ts, static_cast<std::uint32_t>(cfg_.snapshot_nominal_kb)};
  }
  FrameMessage msg;
  msg.node_id = scn.node_id;
  msg.frame_seq = frame_seq_++;
  msg.ts = ts;
  const Scene scene = world_.step(ts);
  if (ts == next_ssd_) {
    next_ssd_ += cfg_.emulator.ssd_period_ms;
    msg.kind = DetectorKind::Ssd;
    msg.detections = emulator_.ssd(scene, {scn.recall_multiplier(ts), scn.score_multiplier(ts)}, msg.frame_seq);
  } else {
    next_bg_ += cfg_.emulator.bg_period_ms;
    msg.kind = DetectorKind::Bg;
    msg.detections = emulator_.bg(scene, msg.frame_seq);
  }
  return msg;
}

}  // namespace parksense
