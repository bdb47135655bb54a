#include "thermoguard/distancing.hpp"

#include <cmath>

#include "thermoguard/errors.hpp"

namespace thermoguard {

void CameraModel::validate() const {
  if (!(range_m > 0.0) || !std::isfinite(range_m)) {
    throw DomainError("camera range_m must be positive and finite");
  }
  if (!(hfov_deg > 0.0) || !(hfov_deg < 180.0)) {
    throw DomainError("camera hfov_deg must lie in (0, 180)");
  }
  if (image_width_px < 0 || image_height_px < 0) {
    throw DomainError("camera image dimensions must not be negative");
  }
}

void DistancingConfig::validate() const {
  if (!(threshold_m > 0.0) || !std::isfinite(threshold_m)) {
    throw DomainError("threshold_m must be positive and finite");
  }
}

const char* safety_color_name(SafetyColor c) {
  return c == SafetyColor::kGreen ? "green" : "red";
}

Point center(const BoundingBox& box) {
  return {box.x + box.w / 2.0, box.y + box.h / 2.0};
}

double pixel_distance(const Point& a, const Point& b) {
  return std::hypot(b.x - a.x, b.y - a.y);
}

double meters_per_pixel(const CameraModel& cam) {
  cam.validate();
  if (cam.image_width_px <= 0) {
    throw DomainError("meters_per_pixel needs a positive image_width_px");
  }
  const double half_angle = cam.hfov_deg * (std::acos(-1.0) / 360.0);
  return 2.0 * cam.range_m * std::tan(half_angle) / cam.image_width_px;
}

FrameAssessment assess_frame(const std::vector<BoundingBox>& boxes, const CameraModel& cam,
                             const DistancingConfig& cfg) {
  cfg.validate();
  FrameAssessment out;
  out.boxes = boxes;
  out.threshold_m = cfg.threshold_m;
  const std::size_t n = boxes.size();
  out.colors.assign(n, SafetyColor::kGreen);
  out.distances_m.assign(n, std::vector<double>(n, 0.0));
  if (n < 2) {
    return out;
  }

  const double mpp = meters_per_pixel(cam);
  std::vector<Point> centers;
  centers.reserve(n);
  for (const BoundingBox& box : boxes) {
    centers.push_back(center(box));
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = pixel_distance(centers[i], centers[j]) * mpp;
      out.distances_m[i][j] = d;
      out.distances_m[j][i] = d;
      if (d < cfg.threshold_m) {
        out.violating_pairs.push_back({static_cast<int>(i), static_cast<int>(j), d});
        out.colors[i] = SafetyColor::kRed;
        out.colors[j] = SafetyColor::kRed;
      }
    }
  }
  return out;
}

}  // namespace thermoguard
