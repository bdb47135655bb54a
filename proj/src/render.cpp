#include "thermoguard/render.hpp"

#include <algorithm>
#include <cmath>

#include "thermoguard/errors.hpp"

namespace thermoguard {

void RenderStyle::validate() const {
  if (line_thickness_px < 1) {
    throw DomainError("line_thickness_px must be at least 1");
  }
}

RgbImage to_rgb(const ThermalFrame& frame) {
  if (frame.width <= 0 || frame.height <= 0 ||
      frame.pixels.size() != static_cast<std::size_t>(frame.width) * frame.height) {
    throw ShapeError("frame pixel count does not match its dimensions");
  }
  RgbImage image;
  image.width = frame.width;
  image.height = frame.height;
  image.pixels.resize(static_cast<std::size_t>(frame.width) * frame.height * 3);
  const unsigned max_value = std::max<unsigned>(1, frame.max_value);
  for (std::size_t i = 0; i < frame.pixels.size(); ++i) {
    const auto v = static_cast<std::uint8_t>(frame.pixels[i] * 255u / max_value);
    image.pixels[3 * i] = v;
    image.pixels[3 * i + 1] = v;
    image.pixels[3 * i + 2] = v;
  }
  return image;
}

RgbImage render_annotated(const ThermalFrame& frame, const FrameAssessment& assessment,
                          const RenderStyle& style) {
  style.validate();
  if (assessment.boxes.size() != assessment.colors.size()) {
    throw ShapeError("assessment has " + std::to_string(assessment.boxes.size()) +
                     " boxes but " + std::to_string(assessment.colors.size()) + " colors");
  }
  RgbImage image = to_rgb(frame);
  const int t = style.line_thickness_px;

  for (std::size_t i = 0; i < assessment.boxes.size(); ++i) {
    const BoundingBox& box = assessment.boxes[i];
    const Rgb color = assessment.colors[i] == SafetyColor::kGreen ? style.safe_color
                                                                  : style.unsafe_color;
    // Outline = the rounded rect minus the same rect shrunk by the thickness.
    const int x0 = static_cast<int>(std::lround(box.x));
    const int y0 = static_cast<int>(std::lround(box.y));
    const int x1 = static_cast<int>(std::lround(box.x + box.w)) - 1;
    const int y1 = static_cast<int>(std::lround(box.y + box.h)) - 1;
    for (int y = std::max(0, y0); y <= std::min(image.height - 1, y1); ++y) {
      const bool edge_row = y < y0 + t || y > y1 - t;
      for (int x = std::max(0, x0); x <= std::min(image.width - 1, x1); ++x) {
        if (edge_row || x < x0 + t || x > x1 - t) {
          image.set(x, y, color);
        }
      }
    }
  }
  return image;
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
    throw ShapeError("image pixel buffer does not match its dimensions");
  }
  const std::string header =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

}  // namespace thermoguard
