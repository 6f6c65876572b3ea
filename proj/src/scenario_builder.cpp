#include "parksense/scenario_builder.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "parksense/edge_sim.hpp"
#include "parksense/error.hpp"

namespace parksense {

namespace {

constexpr TimestampMs kHourMs = 3'600'000;

struct Legs {
  double d1 = 0.0;  // entry -> lane
  double d2 = 0.0;  // lane -> stall
  double d3 = 0.0;  // lane -> exit
};

Legs legs_for(const NodeLayout& layout, std::size_t space, double width, int img_w, double aisle_offset) {
  const auto c = layout.spaces[space].rect.center();
  const double aisle_y = layout.lowest_edge() + aisle_offset;
  Legs l;
  l.d1 = c.x + width / 2.0;
  l.d2 = aisle_y - c.y;
  l.d3 = img_w + width / 2.0 - c.x;
  return l;
}

// Mirrors the departure timing in World.
TimestampMs departure_ms(const Legs& l, double moving_ms) {
  const double total = l.d1 + l.d2;
  const double d = total > 0 ? std::max(moving_ms, moving_ms * (l.d2 + l.d3) / total) : moving_ms;
  return static_cast<TimestampMs>(std::ceil(d));
}

struct Parked {
  std::size_t vehicle;
  std::size_t space;
  TimestampMs wants_to_leave;
  double moving_ms;
};

}  // namespace

std::vector<double> weekday_profile(double peak_per_hour) {
  static constexpr double shape[24] = {0.05, 0.03, 0.02, 0.02, 0.05, 0.15, 0.40, 0.80, 1.00, 0.90, 0.70, 0.60,
                                       0.70, 0.70, 0.60, 0.60, 0.80, 0.90, 0.60, 0.40, 0.30, 0.20, 0.10, 0.08};
  std::vector<double> out;
  for (double s : shape) out.push_back(s * peak_per_hour);
  return out;
}

Scenario build_scenario(const std::string& node_id, const NodeLayout& layout, const EmulatorParams& params,
                        const BuilderOptions& opt) {
  if (opt.shapes.empty()) throw Error(ErrorKind::Config, "builder needs at least one vehicle shape");
  if (opt.arrivals_per_hour.empty()) throw Error(ErrorKind::Config, "builder needs an arrival profile");
  if (layout.node_id != node_id) throw Error(ErrorKind::Map, fmt::format("layout is for node '{}'", layout.node_id));

  Scenario scn;
  scn.node_id = node_id;
  scn.img_w = opt.img_w;
  scn.img_h = opt.img_h;
  scn.duration_ms = opt.duration_ms;
  scn.seed = opt.seed;
  scn.lighting = opt.lighting;

  std::mt19937_64 rng(mix_seed(opt.seed, "builder:" + node_id));
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

  std::vector<bool> usable(layout.size(), true);
  for (const auto& id : opt.reserved_spaces) {
    if (auto i = layout.index_of(id)) usable[*i] = false;
  }
  std::vector<bool> taken(layout.size(), false);
  std::vector<Parked> parked;

  auto moving_time = [&](const Legs& l) {
    const double speed = uni(opt.speed_min_px_s, opt.speed_max_px_s);
    return std::max(opt.min_move_s * 1000.0, std::ceil((l.d1 + l.d2) / speed * 1000.0));
  };
  auto dwell = [&]() { return static_cast<TimestampMs>(uni(opt.dwell_min_s, opt.dwell_max_s) * 1000.0); };
  auto new_vehicle = [&](std::size_t space, const VehicleShape& shape) {
    VehicleSchedule v;
    v.vehicle_id = fmt::format("v{:04d}", scn.vehicles.size() + 1);
    v.vehicle_class = shape.vehicle_class;
    v.width = shape.width;
    v.height = shape.height;
    v.space_id = layout.spaces[space].space_id;
    scn.vehicles.push_back(v);
    return scn.vehicles.size() - 1;
  };

  // Vehicles already parked at t = 0.
  for (std::size_t s = 0; s < layout.size(); ++s) {
    if (!usable[s] || uni(0.0, 1.0) >= opt.initial_occupancy) continue;
    const auto& shape = opt.shapes[pick(opt.shapes.size())];
    const auto idx = new_vehicle(s, shape);
    const auto l = legs_for(layout, s, shape.width, opt.img_w, params.aisle_offset_px);
    const double moving = moving_time(l);
    auto& v = scn.vehicles[idx];
    v.park_ms = -static_cast<TimestampMs>(1000 * (idx + 1));
    v.arrive_ms = v.park_ms - static_cast<TimestampMs>(moving);
    taken[s] = true;
    parked.push_back({idx, s, static_cast<TimestampMs>(uni(0.0, opt.dwell_max_s) * 1000.0), moving});
  }

  auto next_arrival = [&](TimestampMs from) -> TimestampMs {
    double t = static_cast<double>(from);
    while (t < static_cast<double>(opt.duration_ms)) {
      const auto hour = static_cast<std::size_t>(static_cast<TimestampMs>(t) / kHourMs);
      const double rate = opt.arrivals_per_hour[hour % opt.arrivals_per_hour.size()];
      const double hour_end = static_cast<double>((hour + 1) * kHourMs);
      if (rate > 0) {
        const double gap = std::exponential_distribution<double>(rate / kHourMs)(rng);
        if (t + gap < hour_end) return static_cast<TimestampMs>(t + gap);
      }
      t = hour_end;
    }
    return opt.duration_ms;
  };

  const auto gap_ms = static_cast<TimestampMs>(opt.maneuver_gap_s * 1000.0);
  // Earliest start >= t for a maneuver of length len that keeps clear of
  // every quiet window by the maneuver gap.
  auto clear_of_quiet = [&](TimestampMs t, TimestampMs len) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (const auto& [a, b] : opt.quiet) {
        if (t < b + gap_ms && t + len + gap_ms > a) {
          t = b + gap_ms;
          moved = true;
        }
      }
    }
    return t;
  };
  TimestampMs free_at = 0;
  TimestampMs arrival = next_arrival(0);
  while (true) {
    auto leaver = std::min_element(parked.begin(), parked.end(), [](const Parked& a, const Parked& b) {
      return a.wants_to_leave < b.wants_to_leave;
    });
    const bool depart_first = leaver != parked.end() && leaver->wants_to_leave <= arrival;
    const TimestampMs wanted = depart_first ? leaver->wants_to_leave : arrival;
    if (wanted >= opt.duration_ms) break;
    TimestampMs start = std::max(wanted, free_at);
    if (start >= opt.duration_ms) break;

    if (depart_first) {
      auto& v = scn.vehicles[leaver->vehicle];
      const auto l = legs_for(layout, leaver->space, v.width, opt.img_w, params.aisle_offset_px);
      const auto len = departure_ms(l, leaver->moving_ms);
      start = clear_of_quiet(std::max(start, v.park_ms + 1), len);
      if (start >= opt.duration_ms) {
        parked.erase(leaver);
        continue;
      }
      v.depart_ms = start;
      free_at = start + len + gap_ms;
      taken[leaver->space] = false;
      parked.erase(leaver);
      continue;
    }

    arrival = next_arrival(arrival + 1);
    std::vector<std::size_t> free_spaces;
    for (std::size_t s = 0; s < layout.size(); ++s) {
      if (usable[s] && !taken[s]) free_spaces.push_back(s);
    }
    if (free_spaces.empty()) continue;
    const auto space = free_spaces[pick(free_spaces.size())];
    const auto& shape = opt.shapes[pick(opt.shapes.size())];
    const auto l = legs_for(layout, space, shape.width, opt.img_w, params.aisle_offset_px);
    const double moving = moving_time(l);
    double pause_s = 0.0;
    if (uni(0.0, 1.0) < opt.pause_probability) pause_s = std::round(uni(opt.pause_min_s, opt.pause_max_s) * 10.0) / 10.0;
    const auto len = static_cast<TimestampMs>(moving + pause_s * 1000.0);
    start = clear_of_quiet(start, len);
    const TimestampMs park = start + len;
    if (park >= opt.duration_ms) break;
    const auto idx = new_vehicle(space, shape);
    auto& v = scn.vehicles[idx];
    v.arrive_ms = start;
    v.pause_s = pause_s;
    v.park_ms = park;
    taken[space] = true;
    parked.push_back({idx, space, park + dwell(), moving});
    free_at = park + gap_ms;
  }
  return scn;
}

}  // namespace parksense
