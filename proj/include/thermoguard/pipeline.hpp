#pragma once

#include <string>
#include <vector>

#include "thermoguard/config.hpp"
#include "thermoguard/distancing.hpp"
#include "thermoguard/thermal.hpp"
#include "thermoguard/yolo.hpp"

namespace thermoguard {

struct FrameRecord {
  std::string id;
  std::string path;
  std::vector<Detection> detections;
  FrameAssessment assessment;
  std::vector<PersonTemperature> temperatures;  // empty without calibration
  std::string error;  // non-empty when this frame failed; other fields empty

  bool failed() const { return !error.empty(); }
};

struct RunReport {
  std::vector<FrameRecord> frames;  // input order
  int total_frames = 0;
  int total_persons = 0;
  int total_violations = 0;
  int total_fever = 0;
  int failed_frames = 0;
};

// Frame files under dir with extensions .pgm, .ppm, .raw, .raw16, sorted
// lexicographically by filename.
std::vector<std::string> list_frame_files(const std::string& dir);

// Per frame: load, detect (or look up external detections by frame id),
// assess distances, read temperatures when calibrated, then write
// <id>_annotated.ppm and <id>_assessment.json plus a final report.json to
// cfg.output_dir. A failing frame is recorded and the rest still run.
// Frames may be analyzed by a worker pool; outputs are written in input
// order, so results are byte-identical regardless of scheduling.
RunReport run_pipeline(const PipelineConfig& cfg, const std::vector<std::string>& frame_paths);

std::string format_assessment_json(const FrameRecord& record, double threshold_m);
std::string format_run_report_json(const RunReport& report);

}  // namespace thermoguard
