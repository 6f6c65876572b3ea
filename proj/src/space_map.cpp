#include "parksense/space_map.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "parksense/error.hpp"
#include "parksense/text.hpp"

namespace parksense {

std::optional<std::size_t> NodeLayout::index_of(std::string_view space_id) const {
  for (std::size_t i = 0; i < spaces.size(); ++i) {
    if (spaces[i].space_id == space_id) return i;
  }
  return std::nullopt;
}

bool NodeLayout::are_neighbors(std::size_t a, std::size_t b) const {
  const auto& nb = neighbors.at(a);
  return std::find(nb.begin(), nb.end(), b) != nb.end();
}

double NodeLayout::lowest_edge() const {
  double y = 0.0;
  for (const auto& s : spaces) y = std::max(y, s.rect.y2);
  return y;
}

std::optional<std::size_t> locate_space(const NodeLayout& layout, Point p) {
  std::optional<std::size_t> best;
  double best_d = 0.0;
  for (std::size_t i = 0; i < layout.spaces.size(); ++i) {
    const auto& s = layout.spaces[i];
    if (!contains(s.rect, p)) continue;
    const auto c = s.rect.center();
    const double d = std::hypot(c.x - p.x, c.y - p.y);
    if (!best || d < best_d || (d == best_d && s.space_id < layout.spaces[*best].space_id)) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

SpaceMap SpaceMap::parse(std::string_view body, const std::string& source_name) {
  SpaceMap map;
  text::LineCursor lines(body);
  std::string_view raw;
  while (lines.next(raw)) {
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fail = [&](const std::string& why) {
      throw Error(ErrorKind::Parse, fmt::format("{}:{}: {}", source_name, lines.number(), why), lines.number());
    };
    const auto f = text::split(line, ',');
    if (f.size() != 10) fail(fmt::format("expected 10 fields, got {}", f.size()));
    if (f[0] != "S") fail(fmt::format("unknown record tag '{}'", f[0]));
    if (f[1] != "1") fail(fmt::format("unsupported version '{}'", f[1]));
    if (f[2].empty()) fail("empty node_id");
    if (f[3].empty()) fail("empty space_id");
    ParkingSpace s;
    s.node_id = std::string(f[2]);
    s.space_id = std::string(f[3]);
    s.floor = std::string(f[4]);
    const char* names[] = {"x1", "y1", "x2", "y2"};
    double coords[4];
    for (int k = 0; k < 4; ++k) {
      auto v = text::to_double(f[5 + k]);
      if (!v) fail(fmt::format("field {} is not numeric", names[k]));
      coords[k] = *v;
    }
    s.rect = {coords[0], coords[1], coords[2], coords[3]};
    if (!s.rect.valid()) fail("rect must satisfy 0 <= x1 < x2 and 0 <= y1 < y2");
    if (!f[9].empty()) {
      for (auto nb : text::split(f[9], ';')) {
        if (nb.empty()) fail("empty neighbor id");
        s.neighbors.emplace_back(nb);
      }
    }
    map.spaces_.push_back(std::move(s));
  }
  map.build();
  return map;
}

SpaceMap SpaceMap::load(const std::filesystem::path& path) {
  return parse(text::read_file(path.string()), path.string());
}

void SpaceMap::build() {
  std::map<std::string, const ParkingSpace*> by_id;
  for (const auto& s : spaces_) {
    if (!by_id.emplace(s.space_id, &s).second) {
      throw Error(ErrorKind::Map, "duplicate space_id '" + s.space_id + "'");
    }
  }
  for (const auto& s : spaces_) {
    for (const auto& nb : s.neighbors) {
      auto it = by_id.find(nb);
      if (it == by_id.end()) {
        throw Error(ErrorKind::Map, fmt::format("space '{}' lists unknown neighbor '{}'", s.space_id, nb));
      }
      const auto& back = it->second->neighbors;
      if (std::find(back.begin(), back.end(), s.space_id) == back.end()) {
        throw Error(ErrorKind::Map, fmt::format("neighbor link {} -> {} is not symmetric", s.space_id, nb));
      }
    }
  }
  for (const auto& s : spaces_) {
    auto [it, inserted] = layouts_.try_emplace(s.node_id);
    if (inserted) {
      it->second.node_id = s.node_id;
      node_order_.push_back(s.node_id);
    }
    it->second.spaces.push_back(s);
  }
  for (auto& [node, layout] : layouts_) {
    layout.neighbors.resize(layout.spaces.size());
    for (std::size_t i = 0; i < layout.spaces.size(); ++i) {
      for (const auto& nb : layout.spaces[i].neighbors) {
        if (auto j = layout.index_of(nb)) layout.neighbors[i].push_back(*j);
      }
    }
  }
}

std::string SpaceMap::to_text() const {
  std::string out;
  for (const auto& s : spaces_) {
    std::string nbs;
    for (std::size_t i = 0; i < s.neighbors.size(); ++i) {
      if (i) nbs += ';';
      nbs += s.neighbors[i];
    }
    out += fmt::format("S,1,{},{},{},{},{},{},{},{}\n", s.node_id, s.space_id, s.floor, s.rect.x1, s.rect.y1,
                       s.rect.x2, s.rect.y2, nbs);
  }
  return out;
}

std::vector<std::string> SpaceMap::node_ids() const { return node_order_; }

bool SpaceMap::has_node(std::string_view node_id) const { return layouts_.find(node_id) != layouts_.end(); }

const NodeLayout& SpaceMap::layout(std::string_view node_id) const {
  auto it = layouts_.find(node_id);
  if (it == layouts_.end()) throw Error(ErrorKind::Routing, fmt::format("unknown node '{}'", node_id));
  return it->second;
}

}  // namespace parksense
