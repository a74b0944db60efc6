#pragma once

#include <cmath>

namespace edgeswarm {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double k) const { return {x * k, y * k}; }
  bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

// Axis-aligned rectangle; the indoor predicate for building regions.
struct Rect {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  bool contains(Vec2 p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
  bool operator==(const Rect&) const = default;
};

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
  bool operator==(const GeoPoint&) const = default;
};

// Equirectangular projection about a fixed origin. Good to centimeters at
// city scale, which is all the simulation geometry needs; lat/lon exist
// only at ingestion and emission.
class Projection {
 public:
  static constexpr double kEarthRadiusM = 6371000.0;

  explicit Projection(GeoPoint origin) : origin_(origin) {
    cos_lat0_ = std::cos(deg2rad(origin.lat));
  }

  Vec2 to_local(GeoPoint p) const {
    return {kEarthRadiusM * deg2rad(p.lon - origin_.lon) * cos_lat0_,
            kEarthRadiusM * deg2rad(p.lat - origin_.lat)};
  }

  GeoPoint to_geo(Vec2 v) const {
    return {origin_.lat + rad2deg(v.y / kEarthRadiusM),
            origin_.lon + rad2deg(v.x / (kEarthRadiusM * cos_lat0_))};
  }

  GeoPoint origin() const { return origin_; }

  static double deg2rad(double d) { return d * M_PI / 180.0; }
  static double rad2deg(double r) { return r * 180.0 / M_PI; }

 private:
  GeoPoint origin_;
  double cos_lat0_;
};

}  // namespace edgeswarm
