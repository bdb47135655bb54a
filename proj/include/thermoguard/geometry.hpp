#pragma once

namespace thermoguard {

/// Axis-aligned box in pixel coordinates, top-left origin.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool operator==(const BoundingBox&) const = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

}  // namespace thermoguard
