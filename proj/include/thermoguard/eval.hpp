#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "thermoguard/geometry.hpp"
#include "thermoguard/yolo.hpp"

namespace thermoguard {

struct GroundTruthLabel {
  std::string frame;
  std::vector<BoundingBox> boxes;
  bool operator==(const GroundTruthLabel&) const = default;
};

struct MatchedPair {
  int det_index = 0;
  int gt_index = 0;
  double iou = 0.0;
  bool operator==(const MatchedPair&) const = default;
};

struct MatchResult {
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
  std::vector<MatchedPair> matched_pairs;
};

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  bool operator==(const PrPoint&) const = default;
};

struct EvalSummary {
  double average_precision = 0.0;
  double miss_rate = 0.0;
  std::vector<PrPoint> pr_curve;
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
};

// One scored detection with its match outcome, pooled across frames.
struct ScoredOutcome {
  double score = 0.0;
  bool true_positive = false;
};

// Greedy protocol: detections in descending score order (ties: smaller x,
// then y), each takes the unmatched ground-truth box of highest IoU >= iou_min
// (IoU ties: smallest ground-truth index).
MatchResult match_detections(const std::vector<Detection>& dets,
                             const std::vector<BoundingBox>& gts, double iou_min);

// All-points interpolated AP: one PR point per distinct score threshold,
// precision replaced by its running maximum from the high-recall end, area
// accumulated as step functions. total_gt == 0 is undefined.
double average_precision(const std::vector<ScoredOutcome>& outcomes, int total_gt);

std::vector<PrPoint> pr_curve(const std::vector<ScoredOutcome>& outcomes, int total_gt);

double miss_rate(const MatchResult& result);

struct FrameEval {
  std::string frame;
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
};

// Per-frame greedy matching at iou_min using every detection, pooled into a
// dataset-wide AP; counts and miss rate are taken at score_threshold.
EvalSummary evaluate_dataset(const std::vector<FrameDetections>& detections,
                             const std::vector<GroundTruthLabel>& labels, double iou_min,
                             double score_threshold,
                             std::vector<FrameEval>* per_frame = nullptr);

struct SplitSpec {
  std::uint64_t seed = 0;
  double train_fraction = 0.7;
  double val_fraction = 0.2;  // test takes the remainder
};

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

// Deterministic shuffle (fixed generator and rejection sampling, identical on
// every platform), then train = round(0.7 n), val = round(0.2 n), test = rest.
DatasetSplit split_dataset(const std::vector<std::string>& frame_ids, const SplitSpec& spec);

std::string format_label_line(const GroundTruthLabel& label);
GroundTruthLabel parse_label_line(const std::string& json_text);
std::vector<GroundTruthLabel> parse_labels_stream(std::istream& in);

std::string format_eval_report_json(const EvalSummary& summary,
                                    const std::vector<FrameEval>& per_frame);

}  // namespace thermoguard
