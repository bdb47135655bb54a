#pragma once

#include <cstdint>
#include <vector>

#include "thermoguard/distancing.hpp"
#include "thermoguard/thermal.hpp"

namespace thermoguard {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // interleaved rgb, row-major

  Rgb at(int x, int y) const {
    const std::size_t off = (static_cast<std::size_t>(y) * width + x) * 3;
    return {pixels[off], pixels[off + 1], pixels[off + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t off = (static_cast<std::size_t>(y) * width + x) * 3;
    pixels[off] = c.r;
    pixels[off + 1] = c.g;
    pixels[off + 2] = c.b;
  }
};

struct RenderStyle {
  Rgb safe_color{0, 255, 0};
  Rgb unsafe_color{255, 0, 0};
  int line_thickness_px = 2;
  void validate() const;  // thickness >= 1
};

// Counts map linearly onto 8-bit intensity: v = count * 255 / max_value.
RgbImage to_rgb(const ThermalFrame& frame);

// Box outlines only; every pixel outside an outline keeps its gray value.
// Box i takes assessment.colors[i]; outlines are clipped to the image.
RgbImage render_annotated(const ThermalFrame& frame, const FrameAssessment& assessment,
                          const RenderStyle& style);

// Binary pixmap, header "P6\n<w> <h>\n255\n".
std::vector<std::uint8_t> encode_ppm(const RgbImage& image);

}  // namespace thermoguard
