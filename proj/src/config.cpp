#include "thermoguard/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "thermoguard/errors.hpp"

namespace thermoguard {

namespace {

std::string trim(const std::string& s) {
  const std::size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const std::size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void key_error(const std::string& key, std::size_t line_no,
                            const std::string& what) {
  throw ConfigError("config line " + std::to_string(line_no) + ", key '" + key + "': " + what);
}

double parse_real(const std::string& value, const std::string& key, std::size_t line_no) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    key_error(key, line_no, "expected a number, got '" + value + "'");
  }
  return out;
}

int parse_int(const std::string& value, const std::string& key, std::size_t line_no) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    key_error(key, line_no, "expected an integer, got '" + value + "'");
  }
  return out;
}

AnchorSet parse_anchors(const std::string& value, std::size_t line_no) {
  try {
    return parse_anchor_list(value);
  } catch (const Error& e) {
    key_error("anchors", line_no, e.what());
  }
}

std::string real_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void PipelineConfig::validate() const {
  camera.validate();
  distancing.validate();
  decode.validate();
  anchors.validate();
  if (calibration) calibration->validate();
  fever.validate();
  if (detector.path.empty()) {
    throw ConfigError("detector.path is required");
  }
  if (detector.mode == DetectorConfig::Mode::kExternal && !detector.netspec_path.empty()) {
    throw ConfigError("detector.netspec only applies to inference mode");
  }
  if (output_dir.empty()) {
    throw ConfigError("output.dir must not be empty");
  }
}

PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig cfg;
  bool saw_camera_range = false;
  bool saw_camera_fov = false;
  bool saw_detector_mode = false;
  bool has_slope = false;
  bool has_offset = false;
  double slope = 0.0;
  double offset = 0.0;
  std::size_t slope_line = 0;

  std::istringstream in(text);
  std::string raw_line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    std::string line = raw_line;
    const std::size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.resize(comment);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section != "camera" && section != "distancing" && section != "decode" &&
          section != "thermal" && section != "detector" && section != "output") {
        throw ConfigError("config line " + std::to_string(line_no) + ": unknown section [" +
                          section + "]");
      }
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    }
    if (section.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": key '" + key +
                        "' outside any section");
    }

    if (section == "camera") {
      if (key == "range_m") {
        cfg.camera.range_m = parse_real(value, key, line_no);
        saw_camera_range = true;
      } else if (key == "hfov_deg") {
        cfg.camera.hfov_deg = parse_real(value, key, line_no);
        saw_camera_fov = true;
      } else if (key == "image_width_px") {
        cfg.camera.image_width_px = parse_int(value, key, line_no);
      } else if (key == "image_height_px") {
        cfg.camera.image_height_px = parse_int(value, key, line_no);
      } else {
        key_error(key, line_no, "unknown key in [camera]");
      }
    } else if (section == "distancing") {
      if (key == "threshold_m") {
        cfg.distancing.threshold_m = parse_real(value, key, line_no);
        if (!(cfg.distancing.threshold_m > 0.0)) {
          key_error(key, line_no, "must be positive");
        }
      } else {
        key_error(key, line_no, "unknown key in [distancing]");
      }
    } else if (section == "decode") {
      if (key == "conf") {
        cfg.decode.confidence_threshold = parse_real(value, key, line_no);
      } else if (key == "nms_iou") {
        cfg.decode.nms_iou_threshold = parse_real(value, key, line_no);
      } else if (key == "input_size") {
        cfg.decode.input_size = parse_int(value, key, line_no);
      } else if (key == "anchors") {
        cfg.anchors = parse_anchors(value, line_no);
      } else {
        key_error(key, line_no, "unknown key in [decode]");
      }
    } else if (section == "thermal") {
      if (key == "slope") {
        slope = parse_real(value, key, line_no);
        has_slope = true;
        slope_line = line_no;
      } else if (key == "offset") {
        offset = parse_real(value, key, line_no);
        has_offset = true;
      } else if (key == "fever_threshold_c") {
        cfg.fever.fever_threshold_c = parse_real(value, key, line_no);
      } else if (key == "statistic") {
        if (value == "max") {
          cfg.fever.stat = FeverConfig::Stat::kMax;
        } else if (value.size() > 1 && value[0] == 'p') {
          cfg.fever.stat = FeverConfig::Stat::kPercentile;
          cfg.fever.percentile = parse_real(value.substr(1), key, line_no);
        } else {
          key_error(key, line_no, "expected max or p<percentile>, got '" + value + "'");
        }
      } else {
        key_error(key, line_no, "unknown key in [thermal]");
      }
    } else if (section == "detector") {
      if (key == "mode") {
        if (value == "inference") {
          cfg.detector.mode = DetectorConfig::Mode::kInference;
        } else if (value == "external") {
          cfg.detector.mode = DetectorConfig::Mode::kExternal;
        } else {
          key_error(key, line_no, "expected inference or external, got '" + value + "'");
        }
        saw_detector_mode = true;
      } else if (key == "path") {
        cfg.detector.path = value;
      } else if (key == "netspec") {
        cfg.detector.netspec_path = value;
      } else {
        key_error(key, line_no, "unknown key in [detector]");
      }
    } else {  // output
      if (key == "dir") {
        cfg.output_dir = value;
      } else {
        key_error(key, line_no, "unknown key in [output]");
      }
    }
  }

  if (!saw_camera_range || !saw_camera_fov) {
    throw ConfigError("config is missing required camera keys range_m and hfov_deg");
  }
  if (!saw_detector_mode) {
    throw ConfigError("config is missing required key detector.mode");
  }
  if (has_slope != has_offset) {
    throw ConfigError("config line " + std::to_string(slope_line == 0 ? line_no : slope_line) +
                      ": thermal.slope and thermal.offset must appear together");
  }
  if (has_slope) {
    cfg.calibration = TempCalibration{slope, offset};
  }
  cfg.validate();
  return cfg;
}

PipelineConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config_text(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string serialize_config(const PipelineConfig& cfg) {
  std::string out;
  out += "[camera]\n";
  out += "range_m = " + real_text(cfg.camera.range_m) + "\n";
  out += "hfov_deg = " + real_text(cfg.camera.hfov_deg) + "\n";
  out += "image_width_px = " + std::to_string(cfg.camera.image_width_px) + "\n";
  out += "image_height_px = " + std::to_string(cfg.camera.image_height_px) + "\n";
  out += "\n[distancing]\n";
  out += "threshold_m = " + real_text(cfg.distancing.threshold_m) + "\n";
  out += "\n[decode]\n";
  out += "conf = " + real_text(cfg.decode.confidence_threshold) + "\n";
  out += "nms_iou = " + real_text(cfg.decode.nms_iou_threshold) + "\n";
  out += "input_size = " + std::to_string(cfg.decode.input_size) + "\n";
  out += "anchors = " + format_anchor_list(cfg.anchors) + "\n";
  out += "\n[thermal]\n";
  if (cfg.calibration) {
    out += "slope = " + real_text(cfg.calibration->slope) + "\n";
    out += "offset = " + real_text(cfg.calibration->offset) + "\n";
  }
  out += "fever_threshold_c = " + real_text(cfg.fever.fever_threshold_c) + "\n";
  if (cfg.fever.stat == FeverConfig::Stat::kMax) {
    out += "statistic = max\n";
  } else {
    out += "statistic = p" + real_text(cfg.fever.percentile) + "\n";
  }
  out += "\n[detector]\n";
  out += std::string("mode = ") +
         (cfg.detector.mode == DetectorConfig::Mode::kInference ? "inference" : "external") +
         "\n";
  out += "path = " + cfg.detector.path + "\n";
  if (!cfg.detector.netspec_path.empty()) {
    out += "netspec = " + cfg.detector.netspec_path + "\n";
  }
  out += "\n[output]\n";
  out += "dir = " + cfg.output_dir + "\n";
  return out;
}

}  // namespace thermoguard
