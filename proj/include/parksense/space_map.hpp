#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parksense/model.hpp"

namespace parksense {

/// The spaces watched by one camera, with neighbor links resolved to indices
/// into `spaces`. Neighbors on other nodes are dropped here.
struct NodeLayout {
  std::string node_id;
  std::vector<ParkingSpace> spaces;
  std::vector<std::vector<std::size_t>> neighbors;

  std::size_t size() const { return spaces.size(); }
  std::optional<std::size_t> index_of(std::string_view space_id) const;
  bool are_neighbors(std::size_t a, std::size_t b) const;
  /// Lowest space bottom edge; vehicles approach along a lane below it.
  double lowest_edge() const;
};

/// Index of the space whose rect contains `p`. When rects overlap the one
/// whose center is nearest wins, then the smaller space_id.
std::optional<std::size_t> locate_space(const NodeLayout& layout, Point p);

/// Parsed space-map file:
///   S,1,<node_id>,<space_id>,<floor>,<x1>,<y1>,<x2>,<y2>,<nb;nb;...>
class SpaceMap {
 public:
  static SpaceMap parse(std::string_view text, const std::string& source_name = "<memory>");
  static SpaceMap load(const std::filesystem::path& path);

  std::string to_text() const;

  const std::vector<ParkingSpace>& spaces() const { return spaces_; }
  std::vector<std::string> node_ids() const;
  bool has_node(std::string_view node_id) const;
  const NodeLayout& layout(std::string_view node_id) const;

 private:
  void build();

  std::vector<ParkingSpace> spaces_;
  std::map<std::string, NodeLayout, std::less<>> layouts_;
  std::vector<std::string> node_order_;
};

}  // namespace parksense
