#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thermoguard/geometry.hpp"
#include "thermoguard/tensor.hpp"

namespace thermoguard {

struct TempCalibration {
  double slope = 0.0;  // degrees C per count, nonzero
  double offset = 0.0;
  bool operator==(const TempCalibration&) const = default;
  void validate() const;
};

struct ThermalFrame {
  std::string id;
  int width = 0;
  int height = 0;
  // Raw counts row-major; 8-bit sources are widened without rescaling.
  std::vector<std::uint16_t> pixels;
  // Largest representable count of the source (255 or 65535); drives how
  // counts map to display intensity.
  std::uint16_t max_value = 255;
  std::optional<TempCalibration> calibration;

  std::uint16_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
};

struct FeverConfig {
  enum class Stat { kMax, kPercentile };
  double fever_threshold_c = 37.5;
  Stat stat = Stat::kPercentile;
  double percentile = 95.0;  // used when stat == kPercentile, in (0,100]
  bool operator==(const FeverConfig&) const = default;
  void validate() const;
};

struct PersonTemperature {
  int box_index = 0;
  double temperature_c = 0.0;
  bool fever = false;
};

// Graymap (P5) and pixmap (P6) binary variants; pixmaps reduce to luminance
// (r+g+b)/3. 16-bit samples are big-endian per the format convention.
ThermalFrame parse_frame(const std::vector<std::uint8_t>& bytes, const std::string& id);
// Re-encodes as P5 at the frame's source depth.
std::vector<std::uint8_t> write_frame(const ThermalFrame& frame);

// Reads .pgm/.ppm directly, or 16-bit raw with a "<path>.hdr" sidecar
// holding "width height le|be".
ThermalFrame load_frame_file(const std::string& path);

double to_celsius(std::uint16_t raw, const std::optional<TempCalibration>& cal);

// Statistic over the box clipped to the frame: max, or nearest-rank
// percentile (k = ceil(p/100 * n), 1-based over sorted values).
PersonTemperature person_temperature(const ThermalFrame& frame, const BoundingBox& box,
                                     int box_index, const FeverConfig& cfg);

// 3-channel tensor in [0,1]: count / max_value replicated per channel.
Tensor to_tensor(const ThermalFrame& frame);

}  // namespace thermoguard
