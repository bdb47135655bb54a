#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "thermoguard/config.hpp"
#include "thermoguard/errors.hpp"
#include "thermoguard/eval.hpp"
#include "thermoguard/json_writer.hpp"
#include "thermoguard/model_io.hpp"
#include "thermoguard/net.hpp"
#include "thermoguard/pipeline.hpp"
#include "thermoguard/thermal.hpp"
#include "thermoguard/yolo.hpp"

namespace {

using namespace thermoguard;

int do_run(const std::string& config_path, const std::string& frames_dir,
           const std::string& out_dir) {
  PipelineConfig cfg = parse_config(config_path);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  const std::vector<std::string> frames = list_frame_files(frames_dir);
  const RunReport report = run_pipeline(cfg, frames);
  std::cout << "frames=" << report.total_frames << " persons=" << report.total_persons
            << " violations=" << report.total_violations << " fever=" << report.total_fever
            << " failures=" << report.failed_frames << "\n";
  return report.failed_frames > 0 ? 2 : 0;
}

int do_eval(const std::string& detections_path, const std::string& labels_path, double iou_min,
            double score_threshold, const std::string& report_path) {
  std::ifstream dets_in(detections_path);
  if (!dets_in) {
    throw IoError("cannot open detections file '" + detections_path + "'");
  }
  std::ifstream labels_in(labels_path);
  if (!labels_in) {
    throw IoError("cannot open labels file '" + labels_path + "'");
  }
  const std::vector<FrameDetections> detections = parse_detections_stream(dets_in);
  const std::vector<GroundTruthLabel> labels = parse_labels_stream(labels_in);

  std::vector<FrameEval> per_frame;
  const EvalSummary summary =
      evaluate_dataset(detections, labels, iou_min, score_threshold, &per_frame);
  const std::string json = format_eval_report_json(summary, per_frame);
  if (report_path.empty()) {
    std::cout << json << "\n";
  } else {
    std::ofstream out(report_path);
    if (!out) {
      throw IoError("cannot open report file '" + report_path + "' for writing");
    }
    out << json << "\n";
    std::cout << "average_precision=" << jsonw::number(summary.average_precision)
              << " miss_rate=" << jsonw::number(summary.miss_rate) << "\n";
  }
  return 0;
}

int do_decode(const std::string& weights_path, const std::string& netspec_path,
              const std::string& frame_path, double conf, double nms_iou,
              const std::string& anchors_text) {
  const Model model = load_model_file(weights_path);
  if (!model.head) {
    throw ConfigError("weights file '" + weights_path + "' has no detection head");
  }
  if (!netspec_path.empty()) {
    std::ifstream in(netspec_path);
    if (!in) {
      throw IoError("cannot open netspec '" + netspec_path + "'");
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    check_same_structure(model.net, parse_netspec_text(text));
  }

  const ThermalFrame frame = load_frame_file(frame_path);
  if (frame.width != frame.height) {
    throw ShapeError("inference needs square frames; got " + std::to_string(frame.width) + "x" +
                     std::to_string(frame.height));
  }
  const AnchorSet anchors =
      anchors_text.empty() ? default_anchors() : parse_anchor_list(anchors_text);
  DecodeConfig cfg;
  cfg.confidence_threshold = conf;
  cfg.nms_iou_threshold = nms_iou;
  cfg.input_size = frame.width;

  const std::vector<Detection> dets =
      detect(to_tensor(frame), model.net, *model.head, anchors, cfg);
  std::cout << format_frame_detections({frame.id, dets}) << "\n";
  return 0;
}

int do_netinit(const std::string& weights_path, const std::string& netspec_path,
               std::uint64_t seed, int num_classes) {
  Model model;
  model.net = reference_backbone(seed);

  int channels = 3;
  for (const NamedLayer& entry : model.net.layers) {
    if (const auto* conv = std::get_if<ConvLayer>(&entry.layer)) {
      channels = conv->out_channels;
    }
  }
  model.head = seeded_head(channels, static_cast<int>(default_anchors().anchors.size()),
                           num_classes, seed + 1);

  save_model_file(weights_path, model);
  if (!netspec_path.empty()) {
    std::ofstream out(netspec_path);
    if (!out) {
      throw IoError("cannot open netspec '" + netspec_path + "' for writing");
    }
    out << format_netspec_text(model.net);
  }
  std::cout << "wrote " << weights_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermal people monitoring: detection, distancing, fever screening"};
  app.require_subcommand(1);

  std::string config_path;
  std::string frames_dir;
  std::string out_dir;
  CLI::App* run = app.add_subcommand("run", "Process a directory of frames");
  run->add_option("--config", config_path, "Pipeline config file")->required();
  run->add_option("--frames", frames_dir, "Directory of input frames")->required();
  run->add_option("--out", out_dir, "Output directory (overrides the config)");

  std::string detections_path;
  std::string labels_path;
  double iou_min = 0.5;
  double score_threshold = 0.5;
  std::string report_path;
  CLI::App* eval = app.add_subcommand("eval", "Score detections against ground truth");
  eval->add_option("--detections", detections_path, "Detections JSON-lines file")->required();
  eval->add_option("--labels", labels_path, "Ground truth JSON-lines file")->required();
  eval->add_option("--iou", iou_min, "IoU threshold for matching");
  eval->add_option("--score-threshold", score_threshold, "Operating score threshold");
  eval->add_option("--report", report_path, "Write the report here instead of stdout");

  std::string weights_path;
  std::string netspec_path;
  std::string frame_path;
  double conf = 0.5;
  double nms_iou = 0.5;
  std::string anchors_text;
  CLI::App* decode = app.add_subcommand("decode", "Run detection on one frame");
  decode->add_option("--weights", weights_path, "Weights file")->required();
  decode->add_option("--netspec", netspec_path, "Optional structure cross-check");
  decode->add_option("--frame", frame_path, "Input frame")->required();
  decode->add_option("--conf", conf, "Confidence threshold");
  decode->add_option("--nms-iou", nms_iou, "NMS IoU threshold");
  decode->add_option("--anchors", anchors_text, "Anchor list WxH,WxH,...");

  std::string init_weights;
  std::string init_netspec;
  std::uint64_t seed = 0;
  int num_classes = 1;
  CLI::App* netinit = app.add_subcommand("netinit", "Write a seeded reference network");
  netinit->add_option("--weights", init_weights, "Output weights file")->required();
  netinit->add_option("--netspec", init_netspec, "Output structure file");
  netinit->add_option("--seed", seed, "Parameter seed");
  netinit->add_option("--classes", num_classes, "Class count for the head");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return do_run(config_path, frames_dir, out_dir);
    }
    if (eval->parsed()) {
      return do_eval(detections_path, labels_path, iou_min, score_threshold, report_path);
    }
    if (decode->parsed()) {
      return do_decode(weights_path, netspec_path, frame_path, conf, nms_iou, anchors_text);
    }
    return do_netinit(init_weights, init_netspec, seed, num_classes);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
