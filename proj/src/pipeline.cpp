#include "thermoguard/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "thermoguard/errors.hpp"
#include "thermoguard/json_writer.hpp"
#include "thermoguard/log.hpp"
#include "thermoguard/model_io.hpp"
#include "thermoguard/net.hpp"
#include "thermoguard/render.hpp"

namespace thermoguard {

namespace {

namespace fs = std::filesystem;

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open '" + path + "'");
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text;
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw IoError("failed writing '" + path + "'");
  }
}

void write_text(const std::string& path, const std::string& text) {
  write_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

// Everything resolved before the frame loop; shared read-only by workers.
struct DetectorContext {
  bool external = false;
  std::map<std::string, std::vector<Detection>> external_dets;
  Model model;
};

DetectorContext make_detector(const PipelineConfig& cfg) {
  DetectorContext ctx;
  ctx.external = cfg.detector.mode == DetectorConfig::Mode::kExternal;
  if (ctx.external) {
    std::ifstream in(cfg.detector.path);
    if (!in) {
      throw IoError("cannot open detections file '" + cfg.detector.path + "'");
    }
    for (FrameDetections& fd : parse_detections_stream(in)) {
      if (!ctx.external_dets.emplace(fd.frame, std::move(fd.detections)).second) {
        throw ParseError("frame '" + fd.frame + "' appears twice in '" + cfg.detector.path +
                         "'");
      }
    }
    return ctx;
  }

  ctx.model = load_model_file(cfg.detector.path);
  if (!ctx.model.head) {
    throw ConfigError("weights file '" + cfg.detector.path +
                      "' has no detection head; it cannot drive inference");
  }
  if (!cfg.detector.netspec_path.empty()) {
    const NetworkSpec declared = parse_netspec_text(read_text_file(cfg.detector.netspec_path));
    try {
      check_same_structure(ctx.model.net, declared);
    } catch (const ConfigError& e) {
      throw ConfigError("weights do not match '" + cfg.detector.netspec_path + "': " + e.what());
    }
  }
  return ctx;
}

struct FrameOutput {
  FrameRecord record;
  std::vector<std::uint8_t> annotated_ppm;
};

FrameOutput process_frame(const std::string& path, const PipelineConfig& cfg,
                          const DetectorContext& detector) {
  FrameOutput out;
  out.record.id = stem_of(path);
  out.record.path = path;
  try {
    ThermalFrame frame = load_frame_file(path);
    frame.calibration = cfg.calibration;

    if (detector.external) {
      const auto it = detector.external_dets.find(frame.id);
      if (it != detector.external_dets.end()) {
        out.record.detections = it->second;
      }
    } else {
      if (frame.width != frame.height) {
        throw ShapeError("inference needs square frames; got " + std::to_string(frame.width) +
                         "x" + std::to_string(frame.height));
      }
      DecodeConfig decode_cfg = cfg.decode;
      decode_cfg.input_size = frame.width;
      out.record.detections = detect(to_tensor(frame), detector.model.net,
                                     *detector.model.head, cfg.anchors, decode_cfg);
    }

    std::vector<BoundingBox> boxes;
    boxes.reserve(out.record.detections.size());
    for (const Detection& d : out.record.detections) {
      boxes.push_back(d.box);
    }

    CameraModel camera = cfg.camera;
    if (camera.image_width_px == 0) camera.image_width_px = frame.width;
    if (camera.image_height_px == 0) camera.image_height_px = frame.height;

    out.record.assessment = assess_frame(boxes, camera, cfg.distancing);

    if (cfg.calibration) {
      for (std::size_t i = 0; i < boxes.size(); ++i) {
        out.record.temperatures.push_back(
            person_temperature(frame, boxes[i], static_cast<int>(i), cfg.fever));
      }
    }

    out.annotated_ppm = encode_ppm(render_annotated(frame, out.record.assessment, RenderStyle{}));
  } catch (const std::exception& e) {
    out.record = FrameRecord{};
    out.record.id = stem_of(path);
    out.record.path = path;
    out.record.error = e.what();
    out.annotated_ppm.clear();
  }
  return out;
}

}  // namespace

std::vector<std::string> list_frame_files(const std::string& dir) {
  if (!fs::is_directory(dir)) {
    throw IoError("'" + dir + "' is not a directory");
  }
  static const std::set<std::string> kExtensions = {".pgm", ".ppm", ".raw", ".raw16"};
  std::vector<std::string> paths;
  for (const fs::directory_entry& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (kExtensions.count(entry.path().extension().string())) {
      paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end(),
            [](const std::string& a, const std::string& b) {
              return fs::path(a).filename().string() < fs::path(b).filename().string();
            });
  return paths;
}

RunReport run_pipeline(const PipelineConfig& cfg, const std::vector<std::string>& frame_paths) {
  cfg.validate();
  if (frame_paths.empty()) {
    throw ConfigError("no frames to process");
  }
  {
    std::set<std::string> ids;
    for (const std::string& path : frame_paths) {
      if (!ids.insert(stem_of(path)).second) {
        throw ConfigError("duplicate frame id '" + stem_of(path) +
                          "'; frame filenames must have distinct stems");
      }
    }
  }

  const DetectorContext detector = make_detector(cfg);

  const std::size_t n = frame_paths.size();
  std::vector<FrameOutput> outputs(n);
  const unsigned hw = std::thread::hardware_concurrency();
  const std::size_t workers = std::min<std::size_t>(n, hw == 0 ? 1 : hw);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      outputs[i] = process_frame(frame_paths[i], cfg, detector);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          outputs[i] = process_frame(frame_paths[i], cfg, detector);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  fs::create_directories(cfg.output_dir);
  RunReport report;
  report.total_frames = static_cast<int>(n);
  for (FrameOutput& out : outputs) {
    FrameRecord& record = out.record;
    if (record.failed()) {
      ++report.failed_frames;
      log_info("frame '" + record.id + "' failed: " + record.error);
    } else {
      const fs::path base = fs::path(cfg.output_dir) / record.id;
      write_bytes(base.string() + "_annotated.ppm", out.annotated_ppm);
      write_text(base.string() + "_assessment.json",
                 format_assessment_json(record, cfg.distancing.threshold_m) + "\n");
      report.total_persons += static_cast<int>(record.assessment.boxes.size());
      report.total_violations += static_cast<int>(record.assessment.violating_pairs.size());
      for (const PersonTemperature& pt : record.temperatures) {
        if (pt.fever) ++report.total_fever;
      }
      log_debug("frame '" + record.id + "': " +
                std::to_string(record.assessment.boxes.size()) + " persons, " +
                std::to_string(record.assessment.violating_pairs.size()) + " violations");
    }
    report.frames.push_back(std::move(record));
  }

  write_text((fs::path(cfg.output_dir) / "report.json").string(),
             format_run_report_json(report) + "\n");
  log_info("processed " + std::to_string(n) + " frames, " +
           std::to_string(report.total_persons) + " persons, " +
           std::to_string(report.total_violations) + " violations, " +
           std::to_string(report.total_fever) + " fever flags, " +
           std::to_string(report.failed_frames) + " failures");
  return report;
}

std::string format_assessment_json(const FrameRecord& record, double threshold_m) {
  jsonw::Writer w;
  w.begin_object();
  w.key("frame");
  w.value(record.id);
  w.key("threshold_m");
  w.value(threshold_m);
  w.key("persons");
  w.begin_array();
  for (std::size_t i = 0; i < record.assessment.boxes.size(); ++i) {
    const BoundingBox& box = record.assessment.boxes[i];
    w.begin_object();
    w.key("bbox");
    w.begin_object();
    w.key("x");
    w.value(box.x);
    w.key("y");
    w.value(box.y);
    w.key("w");
    w.value(box.w);
    w.key("h");
    w.value(box.h);
    w.end_object();
    w.key("color");
    w.value(safety_color_name(record.assessment.colors[i]));
    if (i < record.temperatures.size()) {
      w.key("temperature_c");
      w.value(record.temperatures[i].temperature_c);
      w.key("fever");
      w.value(record.temperatures[i].fever);
    }
    w.end_object();
  }
  w.end_array();
  w.key("violations");
  w.begin_array();
  for (const ViolatingPair& pair : record.assessment.violating_pairs) {
    w.begin_array();
    w.value(pair.i);
    w.value(pair.j);
    w.value(pair.distance_m);
    w.end_array();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

std::string format_run_report_json(const RunReport& report) {
  jsonw::Writer w;
  w.begin_object();
  w.key("frames");
  w.begin_array();
  for (const FrameRecord& record : report.frames) {
    w.begin_object();
    w.key("frame");
    w.value(record.id);
    if (record.failed()) {
      w.key("error");
      w.value(record.error);
    } else {
      w.key("persons");
      w.value(static_cast<int>(record.assessment.boxes.size()));
      w.key("violations");
      w.value(static_cast<int>(record.assessment.violating_pairs.size()));
      int fever = 0;
      for (const PersonTemperature& pt : record.temperatures) {
        if (pt.fever) ++fever;
      }
      w.key("fever");
      w.value(fever);
    }
    w.end_object();
  }
  w.end_array();
  w.key("totals");
  w.begin_object();
  w.key("frames");
  w.value(report.total_frames);
  w.key("persons");
  w.value(report.total_persons);
  w.key("violations");
  w.value(report.total_violations);
  w.key("fever_flags");
  w.value(report.total_fever);
  w.key("failed_frames");
  w.value(report.failed_frames);
  w.end_object();
  w.end_object();
  return w.str();
}

}  // namespace thermoguard
