#include "parksense/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "parksense/error.hpp"

namespace parksense {

bool BoundingBox::has_area() const {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2) && x1 < x2 && y1 < y2;
}

bool BoundingBox::valid() const { return has_area() && x1 >= 0.0 && y1 >= 0.0; }

BoundingBox box_from_center(Point c, double w, double h) {
  return {c.x - w / 2.0, c.y - h / 2.0, c.x + w / 2.0, c.y + h / 2.0};
}

double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  if (!a.has_area() || !b.has_area()) {
    throw Error(ErrorKind::InvalidGeometry, "iou: degenerate or non-finite box");
  }
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

double coverage(const BoundingBox& region, const BoundingBox& cover) {
  if (!region.has_area()) throw Error(ErrorKind::InvalidGeometry, "coverage: degenerate region");
  return intersection_area(region, cover) / region.area();
}

bool contains(const BoundingBox& box, Point p) {
  return p.x >= box.x1 && p.x <= box.x2 && p.y >= box.y1 && p.y <= box.y2;
}

BoundingBox hull(const BoundingBox& a, const BoundingBox& b) {
  return {std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2), std::max(a.y2, b.y2)};
}

BoundingBox dilate(const BoundingBox& box, double margin) {
  return {box.x1 - margin, box.y1 - margin, box.x2 + margin, box.y2 + margin};
}

std::optional<BoundingBox> clip(const BoundingBox& box, double w, double h) {
  BoundingBox out{std::max(box.x1, 0.0), std::max(box.y1, 0.0), std::min(box.x2, w), std::min(box.y2, h)};
  if (!out.has_area()) return std::nullopt;
  return out;
}

double rect_distance(const BoundingBox& a, const BoundingBox& b) {
  const double dx = std::max({0.0, a.x1 - b.x2, b.x1 - a.x2});
  const double dy = std::max({0.0, a.y1 - b.y2, b.y1 - a.y2});
  return std::hypot(dx, dy);
}

}  // namespace parksense
