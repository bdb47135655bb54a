#pragma once

#include <string>
#include <vector>

#include "thermoguard/geometry.hpp"

namespace thermoguard {

struct CameraModel {
  double range_m = 0.0;    // camera to monitored plane
  double hfov_deg = 0.0;   // horizontal field of view, (0, 180)
  int image_width_px = 0;  // zero means "take it from the frame"
  int image_height_px = 0;
  bool operator==(const CameraModel&) const = default;
  void validate() const;
};

struct DistancingConfig {
  double threshold_m = 2.0;
  bool operator==(const DistancingConfig&) const = default;
  void validate() const;
};

enum class SafetyColor { kGreen, kRed };

const char* safety_color_name(SafetyColor c);

struct ViolatingPair {
  int i = 0;
  int j = 0;  // i < j
  double distance_m = 0.0;
  bool operator==(const ViolatingPair&) const = default;
};

struct FrameAssessment {
  std::vector<BoundingBox> boxes;  // the assessed boxes, in input order
  std::vector<SafetyColor> colors;
  std::vector<ViolatingPair> violating_pairs;          // ordered by (i, j)
  std::vector<std::vector<double>> distances_m;        // full symmetric matrix
  double threshold_m = 0.0;
};

Point center(const BoundingBox& box);

double pixel_distance(const Point& a, const Point& b);

// Planar model: the monitored plane spans 2 * range_m * tan(hfov/2) meters
// across image_width_px pixels. No depth correction.
double meters_per_pixel(const CameraModel& cam);

// Pairwise rule: a pair closer than threshold_m (strictly) marks both boxes
// red; a box in no violating pair is green. With fewer than two boxes no
// pair is evaluated and the camera model is never consulted.
FrameAssessment assess_frame(const std::vector<BoundingBox>& boxes, const CameraModel& cam,
                             const DistancingConfig& cfg);

}  // namespace thermoguard
