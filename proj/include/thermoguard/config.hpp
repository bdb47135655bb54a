#pragma once

#include <optional>
#include <string>

#include "thermoguard/distancing.hpp"
#include "thermoguard/thermal.hpp"
#include "thermoguard/yolo.hpp"

namespace thermoguard {

struct DetectorConfig {
  enum class Mode { kInference, kExternal };
  Mode mode = Mode::kExternal;
  // Inference: the weights file. External: the detections JSON-lines file.
  std::string path;
  // Optional structural cross-check against the loaded weights.
  std::string netspec_path;
  bool operator==(const DetectorConfig&) const = default;
};

struct PipelineConfig {
  CameraModel camera;
  DistancingConfig distancing;
  DecodeConfig decode;
  AnchorSet anchors = default_anchors();
  std::optional<TempCalibration> calibration;
  FeverConfig fever;
  DetectorConfig detector;
  std::string output_dir = "out";
  bool operator==(const PipelineConfig&) const = default;

  // Value-level checks only; referenced paths are checked at run start.
  void validate() const;
};

// INI sections: [camera] range_m, hfov_deg, image_width_px, image_height_px;
// [distancing] threshold_m; [decode] conf, nms_iou, input_size, anchors
// (e.g. 24x64,40x104,72x168); [thermal] slope, offset, fever_threshold_c,
// statistic (max | p<percentile>); [detector] mode, path, netspec;
// [output] dir. '#' or ';' start comments. Unknown keys are rejected with
// the offending key and line number.
PipelineConfig parse_config_text(const std::string& text);
PipelineConfig parse_config(const std::string& path);
std::string serialize_config(const PipelineConfig& cfg);

}  // namespace thermoguard
