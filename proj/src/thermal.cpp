#include "thermoguard/thermal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "thermoguard/errors.hpp"

namespace thermoguard {

namespace {

bool is_pnm_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::string path_stem(const std::string& path) {
  const std::size_t slash = path.find_last_of("/\\");
  const std::size_t base = (slash == std::string::npos) ? 0 : slash + 1;
  const std::size_t dot = path.find_last_of('.');
  if (dot == std::string::npos || dot <= base) return path.substr(base);
  return path.substr(base, dot - base);
}

std::vector<std::uint8_t> read_all_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path + "' for reading");
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

ThermalFrame load_raw16(const std::string& path) {
  const std::string sidecar_path = path + ".hdr";
  std::ifstream sidecar(sidecar_path);
  if (!sidecar) {
    throw IoError("cannot open raw16 sidecar '" + sidecar_path + "'");
  }
  long width = 0;
  long height = 0;
  std::string endian;
  if (!(sidecar >> width >> height >> endian) || width <= 0 || height <= 0 ||
      (endian != "le" && endian != "be")) {
    throw ParseError("sidecar '" + sidecar_path + "' must read `width height le|be`");
  }

  const std::vector<std::uint8_t> bytes = read_all_bytes(path);
  const std::size_t needed = static_cast<std::size_t>(width) * height * 2;
  if (bytes.size() < needed) {
    throw LengthError("'" + path + "' holds " + std::to_string(bytes.size()) +
                      " bytes; header promises " + std::to_string(needed));
  }

  ThermalFrame frame;
  frame.id = path_stem(path);
  frame.width = static_cast<int>(width);
  frame.height = static_cast<int>(height);
  frame.max_value = 65535;
  frame.pixels.resize(static_cast<std::size_t>(width) * height);
  const bool big = endian == "be";
  for (std::size_t i = 0; i < frame.pixels.size(); ++i) {
    const std::uint8_t b0 = bytes[2 * i];
    const std::uint8_t b1 = bytes[2 * i + 1];
    frame.pixels[i] = big ? static_cast<std::uint16_t>((b0 << 8) | b1)
                          : static_cast<std::uint16_t>((b1 << 8) | b0);
  }
  return frame;
}

}  // namespace

void TempCalibration::validate() const {
  if (slope == 0.0 || !std::isfinite(slope) || !std::isfinite(offset)) {
    throw ConfigError("temperature calibration needs a finite nonzero slope and finite offset");
  }
}

void FeverConfig::validate() const {
  if (!std::isfinite(fever_threshold_c)) {
    throw ConfigError("fever_threshold_c must be finite");
  }
  if (stat == Stat::kPercentile && !(percentile > 0.0 && percentile <= 100.0)) {
    throw ConfigError("percentile must lie in (0, 100]");
  }
}

ThermalFrame parse_frame(const std::vector<std::uint8_t>& bytes, const std::string& id) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw ParseError("bad magic at byte 0; expected binary graymap P5 or pixmap P6");
  }
  const bool pixmap = bytes[1] == '6';
  std::size_t pos = 2;
  auto skip_space = [&]() {
    while (pos < bytes.size()) {
      if (is_pnm_space(bytes[pos])) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  auto parse_uint = [&](const char* what) -> unsigned {
    skip_space();
    const std::size_t start = pos;
    unsigned long v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 0xffffffffUL) {
        throw ParseError(std::string(what) + " overflows at byte " + std::to_string(start));
      }
      ++pos;
    }
    if (pos == start) {
      throw ParseError(std::string("expected ") + what + " at byte " + std::to_string(pos));
    }
    return static_cast<unsigned>(v);
  };

  const unsigned width = parse_uint("width");
  const unsigned height = parse_uint("height");
  const unsigned maxval = parse_uint("maxval");
  if (width == 0 || height == 0) {
    throw ParseError("zero image dimension in header");
  }
  if (maxval == 0 || maxval > 65535) {
    throw ParseError("maxval " + std::to_string(maxval) + " outside [1, 65535]");
  }
  if (pos >= bytes.size() || !is_pnm_space(bytes[pos])) {
    throw ParseError("expected whitespace before pixel data at byte " + std::to_string(pos));
  }
  ++pos;

  const std::size_t pixel_count = static_cast<std::size_t>(width) * height;
  const int bytes_per_sample = maxval < 256 ? 1 : 2;
  const std::size_t samples = pixel_count * (pixmap ? 3 : 1);
  const std::size_t needed = samples * bytes_per_sample;
  if (bytes.size() - pos < needed) {
    throw LengthError("payload holds " + std::to_string(bytes.size() - pos) +
                      " bytes; header promises " + std::to_string(needed));
  }

  auto sample_at = [&](std::size_t index) -> std::uint16_t {
    const std::size_t off = pos + index * bytes_per_sample;
    const std::uint16_t v =
        bytes_per_sample == 1
            ? bytes[off]
            : static_cast<std::uint16_t>((bytes[off] << 8) | bytes[off + 1]);
    if (v > maxval) {
      throw ParseError("sample " + std::to_string(v) + " exceeds maxval at byte " +
                       std::to_string(off));
    }
    return v;
  };

  ThermalFrame frame;
  frame.id = id;
  frame.width = static_cast<int>(width);
  frame.height = static_cast<int>(height);
  frame.max_value = static_cast<std::uint16_t>(maxval);
  frame.pixels.resize(pixel_count);
  if (pixmap) {
    for (std::size_t i = 0; i < pixel_count; ++i) {
      const unsigned r = sample_at(3 * i);
      const unsigned g = sample_at(3 * i + 1);
      const unsigned b = sample_at(3 * i + 2);
      frame.pixels[i] = static_cast<std::uint16_t>((r + g + b) / 3);
    }
  } else {
    for (std::size_t i = 0; i < pixel_count; ++i) {
      frame.pixels[i] = sample_at(i);
    }
  }
  return frame;
}

std::vector<std::uint8_t> write_frame(const ThermalFrame& frame) {
  if (frame.width <= 0 || frame.height <= 0 ||
      frame.pixels.size() != static_cast<std::size_t>(frame.width) * frame.height) {
    throw ShapeError("frame pixel count does not match its dimensions");
  }
  if (frame.max_value == 0) {
    throw DomainError("frame max_value must be positive");
  }
  std::string header = "P5\n" + std::to_string(frame.width) + " " +
                       std::to_string(frame.height) + "\n" +
                       std::to_string(frame.max_value) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const bool wide = frame.max_value >= 256;
  out.reserve(out.size() + frame.pixels.size() * (wide ? 2 : 1));
  for (const std::uint16_t v : frame.pixels) {
    if (v > frame.max_value) {
      throw DomainError("pixel value " + std::to_string(v) + " exceeds max_value " +
                        std::to_string(frame.max_value));
    }
    if (wide) {
      out.push_back(static_cast<std::uint8_t>(v >> 8));
      out.push_back(static_cast<std::uint8_t>(v & 0xff));
    } else {
      out.push_back(static_cast<std::uint8_t>(v));
    }
  }
  return out;
}

ThermalFrame load_frame_file(const std::string& path) {
  const std::size_t dot = path.find_last_of('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".raw" || ext == ".raw16") {
    return load_raw16(path);
  }
  try {
    return parse_frame(read_all_bytes(path), path_stem(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const LengthError& e) {
    throw LengthError(path + ": " + e.what());
  }
}

double to_celsius(std::uint16_t raw, const std::optional<TempCalibration>& cal) {
  if (!cal) {
    throw ConfigError("temperature requested without calibration");
  }
  cal->validate();
  return cal->slope * static_cast<double>(raw) + cal->offset;
}

PersonTemperature person_temperature(const ThermalFrame& frame, const BoundingBox& box,
                                     int box_index, const FeverConfig& cfg) {
  cfg.validate();
  const int x0 = std::max(0, static_cast<int>(std::floor(box.x)));
  const int y0 = std::max(0, static_cast<int>(std::floor(box.y)));
  const int x1 = std::min(frame.width, static_cast<int>(std::ceil(box.x + box.w)));
  const int y1 = std::min(frame.height, static_cast<int>(std::ceil(box.y + box.h)));
  if (x0 >= x1 || y0 >= y1) {
    throw DegenerateInputError("person box clipped to the frame is empty");
  }

  std::vector<double> temps;
  temps.reserve(static_cast<std::size_t>(x1 - x0) * (y1 - y0));
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      temps.push_back(to_celsius(frame.at(x, y), frame.calibration));
    }
  }

  double value = 0.0;
  if (cfg.stat == FeverConfig::Stat::kMax) {
    value = *std::max_element(temps.begin(), temps.end());
  } else {
    std::sort(temps.begin(), temps.end());
    const std::size_t n = temps.size();
    std::size_t k = static_cast<std::size_t>(
        std::ceil(cfg.percentile / 100.0 * static_cast<double>(n)));
    if (k == 0) k = 1;
    if (k > n) k = n;
    value = temps[k - 1];
  }

  PersonTemperature out;
  out.box_index = box_index;
  out.temperature_c = value;
  out.fever = value >= cfg.fever_threshold_c;
  return out;
}

Tensor to_tensor(const ThermalFrame& frame) {
  if (frame.width <= 0 || frame.height <= 0) {
    throw ShapeError("frame has no pixels");
  }
  Tensor t(3, frame.height, frame.width);
  const double scale = 1.0 / static_cast<double>(frame.max_value);
  const std::size_t plane = static_cast<std::size_t>(frame.height) * frame.width;
  for (std::size_t i = 0; i < plane; ++i) {
    const float v = static_cast<float>(static_cast<double>(frame.pixels[i]) * scale);
    t.data()[i] = v;
    t.data()[plane + i] = v;
    t.data()[2 * plane + i] = v;
  }
  return t;
}

}  // namespace thermoguard
