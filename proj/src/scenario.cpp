#include "parksense/scenario.hpp"

#include <cmath>

#include <fmt/format.h>

#include "parksense/error.hpp"
#include "parksense/text.hpp"

namespace parksense {

Scenario Scenario::parse(std::string_view body, const std::string& source_name) {
  Scenario scn;
  bool have_header = false;
  text::LineCursor lines(body);
  std::string_view raw;
  while (lines.next(raw)) {
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fail = [&](const std::string& why) {
      throw Error(ErrorKind::Parse, fmt::format("{}:{}: {}", source_name, lines.number(), why), lines.number());
    };
    const auto f = text::split(line, ',');
    auto i64 = [&](std::size_t k, const char* name) {
      auto v = text::to_int<std::int64_t>(f[k]);
      if (!v) fail(fmt::format("field {} is not an integer", name));
      return *v;
    };
    auto num = [&](std::size_t k, const char* name) {
      auto v = text::to_double(f[k]);
      if (!v || !std::isfinite(*v)) fail(fmt::format("field {} is not numeric", name));
      return *v;
    };
    if (f[0] == "N") {
      if (have_header) fail("duplicate N header");
      if (f.size() != 7) fail(fmt::format("N record expects 7 fields, got {}", f.size()));
      if (f[1] != "1") fail(fmt::format("unsupported version '{}'", f[1]));
      if (f[2].empty()) fail("empty node_id");
      scn.node_id = std::string(f[2]);
      scn.img_w = static_cast<int>(i64(3, "img_w"));
      scn.img_h = static_cast<int>(i64(4, "img_h"));
      scn.duration_ms = i64(5, "duration_ms");
      auto seed = text::to_int<std::uint64_t>(f[6]);
      if (!seed) fail("field seed is not an unsigned integer");
      scn.seed = *seed;
      if (scn.img_w <= 0 || scn.img_h <= 0) fail("image dimensions must be positive");
      if (scn.duration_ms <= 0) fail("duration_ms must be positive");
      have_header = true;
    } else if (f[0] == "V") {
      if (f.size() != 10) fail(fmt::format("V record expects 10 fields, got {}", f.size()));
      VehicleSchedule v;
      v.vehicle_id = std::string(f[1]);
      v.vehicle_class = std::string(f[2]);
      v.width = num(3, "w");
      v.height = num(4, "h");
      v.arrive_ms = i64(5, "arrive_ms");
      v.space_id = std::string(f[6]);
      v.pause_s = num(7, "pause_s");
      v.park_ms = i64(8, "park_ms");
      if (f[9] != "-") v.depart_ms = i64(9, "depart_ms");
      if (v.vehicle_id.empty()) fail("empty vehicle_id");
      if (!is_vehicle(v.vehicle_class)) fail(fmt::format("class '{}' is not a vehicle class", v.vehicle_class));
      if (v.width <= 0 || v.height <= 0) fail("vehicle body must have positive size");
      if (v.pause_s < 0) fail("pause_s must be >= 0");
      if (!(v.arrive_ms < v.park_ms)) fail("arrive_ms must precede park_ms");
      if (v.depart_ms && !(v.park_ms < *v.depart_ms)) fail("park_ms must precede depart_ms");
      if (static_cast<double>(v.park_ms - v.arrive_ms) <= v.pause_s * 1000.0) {
        fail("pause does not fit between arrive_ms and park_ms");
      }
      scn.vehicles.push_back(std::move(v));
    } else if (f[0] == "L") {
      if (f.size() != 5) fail(fmt::format("L record expects 5 fields, got {}", f.size()));
      LightingEvent e{i64(1, "start_ms"), i64(2, "end_ms"), num(3, "recall_mult"), num(4, "score_mult")};
      if (!(e.start_ms < e.end_ms)) fail("lighting event needs start_ms < end_ms");
      if (e.recall_mult < 0 || e.score_mult < 0) fail("multipliers must be >= 0");
      scn.lighting.push_back(e);
    } else {
      fail(fmt::format("unknown record tag '{}'", f[0]));
    }
  }
  if (!have_header) throw Error(ErrorKind::Parse, source_name + ": missing N header");
  return scn;
}

Scenario Scenario::load(const std::filesystem::path& path) {
  return parse(text::read_file(path.string()), path.string());
}

std::string Scenario::to_text() const {
  std::string out = fmt::format("N,1,{},{},{},{},{}\n", node_id, img_w, img_h, duration_ms, seed);
  for (const auto& e : lighting) {
    out += fmt::format("L,{},{},{},{}\n", e.start_ms, e.end_ms, e.recall_mult, e.score_mult);
  }
  for (const auto& v : vehicles) {
    out += fmt::format("V,{},{},{},{},{},{},{},{},{}\n", v.vehicle_id, v.vehicle_class, v.width, v.height,
                       v.arrive_ms, v.space_id, v.pause_s, v.park_ms,
                       v.depart_ms ? std::to_string(*v.depart_ms) : std::string("-"));
  }
  return out;
}

void Scenario::validate(const NodeLayout& layout) const {
  if (layout.node_id != node_id) {
    throw Error(ErrorKind::Map, fmt::format("scenario node '{}' does not match layout '{}'", node_id, layout.node_id));
  }
  for (const auto& v : vehicles) {
    if (!layout.index_of(v.space_id)) {
      throw Error(ErrorKind::Map, fmt::format("vehicle '{}' targets unknown space '{}'", v.vehicle_id, v.space_id));
    }
    if (v.width > img_w || v.height > img_h) {
      throw Error(ErrorKind::Range, fmt::format("vehicle '{}' does not fit the image", v.vehicle_id));
    }
  }
  for (const auto& s : layout.spaces) {
    if (s.rect.x2 > img_w || s.rect.y2 > img_h) {
      throw Error(ErrorKind::Range, fmt::format("space '{}' lies outside the image", s.space_id));
    }
  }
}

double Scenario::recall_multiplier(TimestampMs ts) const {
  double m = 1.0;
  for (const auto& e : lighting) {
    if (e.active(ts)) m *= e.recall_mult;
  }
  return m;
}

double Scenario::score_multiplier(TimestampMs ts) const {
  double m = 1.0;
  for (const auto& e : lighting) {
    if (e.active(ts)) m *= e.score_mult;
  }
  return m;
}

bool Scenario::lighting_active(TimestampMs ts) const {
  for (const auto& e : lighting) {
    if (e.active(ts)) return true;
  }
  return false;
}

}  // namespace parksense
