#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace boxuq {

// Wraps an angle into (-pi, pi].
double normalize_angle(double rad);

// Oriented 3D box in a right-handed ground frame: x/y span the ground plane,
// z points up. The BEV projection drops c3 and h.
struct BoxParams {
  double c1 = 0.0;   // center x [m]
  double c2 = 0.0;   // center y [m]
  double c3 = 0.0;   // center z [m]
  double l = 1.0;    // extent along the heading [m]
  double w = 1.0;    // extent across the heading [m]
  double h = 1.0;    // vertical extent [m]
  double yaw = 0.0;  // heading about +z, stored in (-pi, pi]

  static BoxParams bev(double cx, double cy, double length, double width,
                       double yaw_rad);

  Eigen::Vector2d center_bev() const { return {c1, c2}; }
  double area_bev() const { return l * w; }

  // Throws std::invalid_argument unless l, w, h > 0, yaw in (-pi, pi] and all
  // fields are finite.
  void validate() const;

  // Copy with yaw wrapped into (-pi, pi].
  BoxParams normalized() const;
};

// Point in the unit box [-1/2, 1/2]^3; v1 scales l, v2 scales w, v3 scales h.
struct UnitPoint {
  double v1 = 0.0;
  double v2 = 0.0;
  double v3 = 0.0;
};

struct ConvexPolygon {
  std::vector<Eigen::Vector2d> vertices;  // counterclockwise order

  bool empty() const { return vertices.size() < 3; }
  double area() const;  // shoelace; 0 for degenerate polygons
};

// Scales the unit point by the box extents, rotates by yaw and translates by
// the center.
Eigen::Vector3d box_to_world(const BoxParams& box, const UnitPoint& v0);
Eigen::Vector2d box_to_world_bev(const BoxParams& box, double v1, double v2);

// BEV corners counterclockwise starting at the rear-left corner
// (v1, v2) = (-1/2, +1/2).
std::array<Eigen::Vector2d, 4> box_corners_bev(const BoxParams& box);
ConvexPolygon box_polygon_bev(const BoxParams& box);

// Clips a against the edges of b (both convex, counterclockwise).
ConvexPolygon polygon_intersection(const ConvexPolygon& a,
                                   const ConvexPolygon& b);

// Convex hull in counterclockwise order; collinear boundary points dropped.
ConvexPolygon convex_hull(std::vector<Eigen::Vector2d> points);

// Intersection-over-union of the BEV rectangles. Intersection areas below
// 1e-12 count as empty.
double iou_bev(const BoxParams& a, const BoxParams& b);

// Unit points walked counterclockwise along the BEV boundary from the
// rear-left corner at uniform arc length. Count = floor(perimeter / spacing)
// with spacing in world meters; spacing >= perimeter throws.
std::vector<UnitPoint> sample_boundary_points(const BoxParams& box,
                                              double spacing);

// Cell centers of an nx-by-ny grid over the unit square (v3 = 0).
std::vector<UnitPoint> sample_interior_points(int nx, int ny);

enum class AlignMode {
  kCenter,  // keep the predicted center
  kCorner,  // keep the predicted corner nearest to the observer
};

// Replaces the predicted size with the ground-truth size while keeping the
// predicted yaw and the anchor chosen by the mode. Observer is a BEV point.
BoxParams align_box(const BoxParams& pred, const BoxParams& gt, AlignMode mode,
                    const Eigen::Vector2d& observer);

}  // namespace boxuq
