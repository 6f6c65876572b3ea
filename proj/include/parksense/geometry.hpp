#pragma once

#include <optional>

namespace parksense {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned image rectangle. Origin is top-left, y grows downward.
/// Edges are closed: a point on an edge is inside.
struct BoundingBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  Point center() const { return {(x1 + x2) / 2.0, (y1 + y2) / 2.0}; }

  /// Finite coordinates and strictly positive extent in both axes.
  bool has_area() const;
  /// has_area() plus non-negative coordinates (the image-frame invariant).
  bool valid() const;

  bool operator==(const BoundingBox&) const = default;
};

BoundingBox box_from_center(Point c, double w, double h);

/// Area of the closed intersection; zero when the boxes are disjoint.
double intersection_area(const BoundingBox& a, const BoundingBox& b);

/// Intersection over union. Throws ErrorKind::InvalidGeometry when either box
/// has zero area or non-finite coordinates.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Fraction of `region` covered by `cover`: area(region ∩ cover) / area(region).
double coverage(const BoundingBox& region, const BoundingBox& cover);

bool contains(const BoundingBox& box, Point p);

BoundingBox hull(const BoundingBox& a, const BoundingBox& b);

BoundingBox dilate(const BoundingBox& box, double margin);

/// Clip to [0,w]x[0,h]; nullopt when nothing with positive area remains.
std::optional<BoundingBox> clip(const BoundingBox& box, double w, double h);

/// Euclidean gap between two rectangles; zero when they touch or overlap.
double rect_distance(const BoundingBox& a, const BoundingBox& b);

}  // namespace parksense
