#include "boxuq/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace boxuq {

namespace {

constexpr double kDegenerateArea = 1e-12;

bool finite(double v) { return std::isfinite(v); }

Eigen::Matrix2d rotation2d(double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

// Signed distance of p from the directed line a->b; positive on the left.
double cross_edge(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                  const Eigen::Vector2d& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

Eigen::Vector2d line_intersection(const Eigen::Vector2d& a,
                                  const Eigen::Vector2d& b,
                                  const Eigen::Vector2d& p,
                                  const Eigen::Vector2d& q) {
  const Eigen::Vector2d r = b - a;
  const Eigen::Vector2d s = q - p;
  const double denom = r.x() * s.y() - r.y() * s.x();
  const double t = ((p - a).x() * s.y() - (p - a).y() * s.x()) / denom;
  return a + t * r;
}

void drop_duplicate_vertices(std::vector<Eigen::Vector2d>& v) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(v.size());
  for (const auto& p : v) {
    if (out.empty() || (p - out.back()).norm() > 1e-12) out.push_back(p);
  }
  while (out.size() > 1 && (out.front() - out.back()).norm() <= 1e-12) {
    out.pop_back();
  }
  v = std::move(out);
}

}  // namespace

double normalize_angle(double rad) {
  const double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(rad, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

BoxParams BoxParams::bev(double cx, double cy, double length, double width,
                         double yaw_rad) {
  BoxParams b;
  b.c1 = cx;
  b.c2 = cy;
  b.l = length;
  b.w = width;
  b.yaw = normalize_angle(yaw_rad);
  return b;
}

void BoxParams::validate() const {
  for (double v : {c1, c2, c3, l, w, h, yaw}) {
    if (!finite(v)) throw std::invalid_argument("box has non-finite field");
  }
  if (l <= 0.0 || w <= 0.0 || h <= 0.0) {
    throw std::invalid_argument("box extents must be positive");
  }
  if (yaw <= -std::numbers::pi || yaw > std::numbers::pi) {
    throw std::invalid_argument("box yaw outside (-pi, pi]");
  }
}

BoxParams BoxParams::normalized() const {
  BoxParams b = *this;
  b.yaw = normalize_angle(yaw);
  return b;
}

double ConvexPolygon::area() const {
  if (vertices.size() < 3) return 0.0;
  double twice = 0.0;
  for (size_t i = 0; i < vertices.size(); ++i) {
    const auto& p = vertices[i];
    const auto& q = vertices[(i + 1) % vertices.size()];
    twice += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * twice;
}

Eigen::Vector3d box_to_world(const BoxParams& box, const UnitPoint& v0) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double dx = box.l * v0.v1;
  const double dy = box.w * v0.v2;
  return {box.c1 + c * dx - s * dy, box.c2 + s * dx + c * dy,
          box.c3 + box.h * v0.v3};
}

Eigen::Vector2d box_to_world_bev(const BoxParams& box, double v1, double v2) {
  const Eigen::Vector3d p = box_to_world(box, UnitPoint{v1, v2, 0.0});
  return {p.x(), p.y()};
}

std::array<Eigen::Vector2d, 4> box_corners_bev(const BoxParams& box) {
  return {box_to_world_bev(box, -0.5, 0.5), box_to_world_bev(box, -0.5, -0.5),
          box_to_world_bev(box, 0.5, -0.5), box_to_world_bev(box, 0.5, 0.5)};
}

ConvexPolygon box_polygon_bev(const BoxParams& box) {
  const auto corners = box_corners_bev(box);
  ConvexPolygon poly;
  poly.vertices.assign(corners.begin(), corners.end());
  return poly;
}

ConvexPolygon polygon_intersection(const ConvexPolygon& a,
                                   const ConvexPolygon& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<Eigen::Vector2d> out = a.vertices;
  const auto& clip = b.vertices;
  for (size_t i = 0; i < clip.size() && !out.empty(); ++i) {
    const Eigen::Vector2d& ca = clip[i];
    const Eigen::Vector2d& cb = clip[(i + 1) % clip.size()];
    std::vector<Eigen::Vector2d> in = std::move(out);
    out.clear();
    for (size_t j = 0; j < in.size(); ++j) {
      const Eigen::Vector2d& p = in[j];
      const Eigen::Vector2d& q = in[(j + 1) % in.size()];
      const double dp = cross_edge(ca, cb, p);
      const double dq = cross_edge(ca, cb, q);
      if (dp >= -1e-12) out.push_back(p);
      if ((dp > 1e-12 && dq < -1e-12) || (dp < -1e-12 && dq > 1e-12)) {
        out.push_back(line_intersection(p, q, ca, cb));
      }
    }
  }
  drop_duplicate_vertices(out);
  ConvexPolygon result;
  if (out.size() >= 3) result.vertices = std::move(out);
  return result;
}

ConvexPolygon convex_hull(std::vector<Eigen::Vector2d> points) {
  std::sort(points.begin(), points.end(),
            [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
              return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
            });
  points.erase(std::unique(points.begin(), points.end(),
                           [](const Eigen::Vector2d& a,
                              const Eigen::Vector2d& b) { return a == b; }),
               points.end());
  const size_t n = points.size();
  if (n < 3) return {};
  std::vector<Eigen::Vector2d> hull(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {  // lower chain
    while (k >= 2 &&
           cross_edge(hull[k - 2], hull[k - 1], points[i]) <= 0.0) {
      --k;
    }
    hull[k++] = points[i];
  }
  for (size_t i = n - 1, t = k + 1; i-- > 0;) {  // upper chain
    while (k >= t &&
           cross_edge(hull[k - 2], hull[k - 1], points[i]) <= 0.0) {
      --k;
    }
    hull[k++] = points[i];
  }
  hull.resize(k - 1);
  ConvexPolygon poly;
  if (hull.size() >= 3) poly.vertices = std::move(hull);
  return poly;
}

double iou_bev(const BoxParams& a, const BoxParams& b) {
  a.validate();
  b.validate();
  const double inter =
      polygon_intersection(box_polygon_bev(a), box_polygon_bev(b)).area();
  if (inter < kDegenerateArea) return 0.0;
  const double uni = a.area_bev() + b.area_bev() - inter;
  return inter / uni;
}

std::vector<UnitPoint> sample_boundary_points(const BoxParams& box,
                                              double spacing) {
  box.validate();
  if (spacing <= 0.0) throw std::invalid_argument("spacing must be positive");
  const double perimeter = 2.0 * (box.l + box.w);
  if (spacing >= perimeter) {
    throw std::invalid_argument("spacing must be below the box perimeter");
  }
  // Walk counterclockwise from the rear-left corner; the segment lengths are
  // w (rear), l (right), w (front), l (left).
  const std::array<UnitPoint, 4> corners = {
      UnitPoint{-0.5, 0.5, 0.0}, UnitPoint{-0.5, -0.5, 0.0},
      UnitPoint{0.5, -0.5, 0.0}, UnitPoint{0.5, 0.5, 0.0}};
  const std::array<double, 4> seg_len = {box.w, box.l, box.w, box.l};
  const int count = static_cast<int>(std::floor(perimeter / spacing));
  std::vector<UnitPoint> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    double arc = k * spacing;
    int seg = 0;
    while (seg < 3 && arc >= seg_len[seg]) {
      arc -= seg_len[seg];
      ++seg;
    }
    const UnitPoint& a = corners[seg];
    const UnitPoint& b = corners[(seg + 1) % 4];
    const double t = arc / seg_len[seg];
    out.push_back(UnitPoint{a.v1 + t * (b.v1 - a.v1),
                            a.v2 + t * (b.v2 - a.v2), 0.0});
  }
  return out;
}

std::vector<UnitPoint> sample_interior_points(int nx, int ny) {
  if (nx <= 0 || ny <= 0) {
    throw std::invalid_argument("interior grid needs positive counts");
  }
  std::vector<UnitPoint> out;
  out.reserve(static_cast<size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      out.push_back(UnitPoint{-0.5 + (ix + 0.5) / nx, -0.5 + (iy + 0.5) / ny,
                              0.0});
    }
  }
  return out;
}

BoxParams align_box(const BoxParams& pred, const BoxParams& gt, AlignMode mode,
                    const Eigen::Vector2d& observer) {
  pred.validate();
  gt.validate();
  BoxParams out = pred;
  out.l = gt.l;
  out.w = gt.w;
  out.h = gt.h;
  if (mode == AlignMode::kCenter) return out;

  const auto corners = box_corners_bev(pred);
  const std::array<Eigen::Vector2d, 4> unit = {
      Eigen::Vector2d{-0.5, 0.5}, Eigen::Vector2d{-0.5, -0.5},
      Eigen::Vector2d{0.5, -0.5}, Eigen::Vector2d{0.5, 0.5}};
  int nearest = 0;
  double best = (corners[0] - observer).squaredNorm();
  for (int i = 1; i < 4; ++i) {
    const double d = (corners[i] - observer).squaredNorm();
    if (d < best) {
      best = d;
      nearest = i;
    }
  }
  // Move the center so the resized box keeps the anchored corner in place.
  const Eigen::Vector2d offset =
      rotation2d(pred.yaw) *
      Eigen::Vector2d(out.l * unit[nearest].x(), out.w * unit[nearest].y());
  const Eigen::Vector2d center = corners[nearest] - offset;
  out.c1 = center.x();
  out.c2 = center.y();
  return out;
}

}  // namespace boxuq
