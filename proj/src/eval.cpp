#include "thermoguard/eval.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "nlohmann/json.hpp"
#include "thermoguard/errors.hpp"
#include "thermoguard/json_writer.hpp"

namespace thermoguard {

namespace {

bool match_order_before(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.box.x != b.box.x) return a.box.x < b.box.x;
  if (a.box.y != b.box.y) return a.box.y < b.box.y;
  if (a.box.w != b.box.w) return a.box.w < b.box.w;
  return a.box.h < b.box.h;
}

// Uniform integer in [0, n) by rejection; mt19937_64 output is specified by
// the standard, so the shuffle is identical on every platform.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n);

}  // namespace

MatchResult match_detections(const std::vector<Detection>& dets,
                             const std::vector<BoundingBox>& gts, double iou_min) {
  if (!(iou_min > 0.0 && iou_min <= 1.0)) {
    throw DomainError("iou_min must lie in (0, 1]");
  }

  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return match_order_before(dets[static_cast<std::size_t>(a)],
                                                          dets[static_cast<std::size_t>(b)]); });

  MatchResult result;
  std::vector<bool> gt_taken(gts.size(), false);
  for (const int det_index : order) {
    const Detection& det = dets[static_cast<std::size_t>(det_index)];
    int best_gt = -1;
    double best_iou = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_taken[g]) continue;
      const double overlap = iou(det.box, gts[g]);
      if (overlap >= iou_min && overlap > best_iou) {
        best_iou = overlap;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      gt_taken[static_cast<std::size_t>(best_gt)] = true;
      result.matched_pairs.push_back({det_index, best_gt, best_iou});
    }
  }

  result.true_positives = static_cast<int>(result.matched_pairs.size());
  result.false_positives = static_cast<int>(dets.size()) - result.true_positives;
  result.false_negatives = static_cast<int>(gts.size()) - result.true_positives;
  return result;
}

std::vector<PrPoint> pr_curve(const std::vector<ScoredOutcome>& outcomes, int total_gt) {
  if (total_gt <= 0) {
    throw UndefinedMetricError("precision-recall is undefined without ground truth boxes");
  }
  std::vector<ScoredOutcome> sorted = outcomes;
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredOutcome& a, const ScoredOutcome& b) { return a.score > b.score; });

  std::vector<PrPoint> points;
  int tp = 0;
  int fp = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].true_positive) {
      ++tp;
    } else {
      ++fp;
    }
    const bool last_of_score = i + 1 == sorted.size() || sorted[i + 1].score != sorted[i].score;
    if (last_of_score) {
      points.push_back({static_cast<double>(tp) / total_gt,
                        static_cast<double>(tp) / (tp + fp)});
    }
  }
  return points;
}

double average_precision(const std::vector<ScoredOutcome>& outcomes, int total_gt) {
  const std::vector<PrPoint> points = pr_curve(outcomes, total_gt);
  if (points.empty()) {
    return 0.0;
  }

  // Precision envelope: each point gets the best precision at its recall or
  // beyond, which makes the curve non-increasing before integration.
  std::vector<double> envelope(points.size());
  double running = 0.0;
  for (std::size_t i = points.size(); i-- > 0;) {
    running = std::max(running, points[i].precision);
    envelope[i] = running;
  }

  double area = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    area += (points[i].recall - prev_recall) * envelope[i];
    prev_recall = points[i].recall;
  }
  return area;
}

double miss_rate(const MatchResult& result) {
  const int gt_total = result.true_positives + result.false_negatives;
  if (gt_total <= 0) {
    throw UndefinedMetricError("miss rate is undefined without ground truth boxes");
  }
  return static_cast<double>(result.false_negatives) / gt_total;
}

EvalSummary evaluate_dataset(const std::vector<FrameDetections>& detections,
                             const std::vector<GroundTruthLabel>& labels, double iou_min,
                             double score_threshold, std::vector<FrameEval>* per_frame) {
  std::map<std::string, const std::vector<Detection>*> dets_by_frame;
  for (const FrameDetections& fd : detections) {
    if (!dets_by_frame.emplace(fd.frame, &fd.detections).second) {
      throw ParseError("frame '" + fd.frame + "' appears twice in the detections input");
    }
  }
  std::map<std::string, const std::vector<BoundingBox>*> gts_by_frame;
  for (const GroundTruthLabel& label : labels) {
    if (!gts_by_frame.emplace(label.frame, &label.boxes).second) {
      throw ParseError("frame '" + label.frame + "' appears twice in the labels input");
    }
  }

  std::set<std::string> frames;
  for (const auto& [id, _] : dets_by_frame) frames.insert(id);
  for (const auto& [id, _] : gts_by_frame) frames.insert(id);

  const std::vector<Detection> no_dets;
  const std::vector<BoundingBox> no_gts;

  std::vector<ScoredOutcome> outcomes;
  int total_gt = 0;
  EvalSummary summary;
  if (per_frame) per_frame->clear();

  for (const std::string& id : frames) {
    const auto dit = dets_by_frame.find(id);
    const auto git = gts_by_frame.find(id);
    const std::vector<Detection>& dets = dit == dets_by_frame.end() ? no_dets : *dit->second;
    const std::vector<BoundingBox>& gts = git == gts_by_frame.end() ? no_gts : *git->second;
    total_gt += static_cast<int>(gts.size());

    // AP pools every detection; a higher-scored detection's match cannot be
    // disturbed by dropping lower-scored ones, so one greedy pass serves all
    // thresholds.
    const MatchResult full = match_detections(dets, gts, iou_min);
    std::vector<bool> is_tp(dets.size(), false);
    for (const MatchedPair& p : full.matched_pairs) {
      is_tp[static_cast<std::size_t>(p.det_index)] = true;
    }
    for (std::size_t i = 0; i < dets.size(); ++i) {
      outcomes.push_back({dets[i].score, is_tp[i]});
    }

    // Operating-point counts use only detections at or above the threshold.
    std::vector<Detection> selected;
    for (const Detection& d : dets) {
      if (d.score >= score_threshold) selected.push_back(d);
    }
    const MatchResult at_threshold = match_detections(selected, gts, iou_min);
    summary.true_positives += at_threshold.true_positives;
    summary.false_positives += at_threshold.false_positives;
    summary.false_negatives += at_threshold.false_negatives;
    if (per_frame) {
      per_frame->push_back({id, at_threshold.true_positives, at_threshold.false_positives,
                            at_threshold.false_negatives});
    }
  }

  if (total_gt <= 0) {
    throw UndefinedMetricError("evaluation is undefined without ground truth boxes");
  }
  summary.pr_curve = pr_curve(outcomes, total_gt);
  summary.average_precision = average_precision(outcomes, total_gt);
  MatchResult overall;
  overall.true_positives = summary.true_positives;
  overall.false_negatives = summary.false_negatives;
  summary.miss_rate = miss_rate(overall);
  return summary;
}

namespace {

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

}  // namespace

DatasetSplit split_dataset(const std::vector<std::string>& frame_ids, const SplitSpec& spec) {
  if (frame_ids.empty()) {
    throw DomainError("cannot split an empty frame list");
  }
  if (spec.train_fraction < 0.0 || spec.val_fraction < 0.0 ||
      spec.train_fraction + spec.val_fraction > 1.0 + 1e-12) {
    throw ConfigError("split fractions must be non-negative and sum to at most 1");
  }

  std::vector<std::string> ids = frame_ids;
  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = ids.size() - 1; i > 0; --i) {
    const std::uint64_t j = bounded(rng, static_cast<std::uint64_t>(i) + 1);
    std::swap(ids[i], ids[static_cast<std::size_t>(j)]);
  }

  const auto n = static_cast<long long>(ids.size());
  long long train = std::llround(spec.train_fraction * static_cast<double>(n));
  train = std::min(train, n);
  long long val = std::llround(spec.val_fraction * static_cast<double>(n));
  val = std::min(val, n - train);

  DatasetSplit split;
  split.train.assign(ids.begin(), ids.begin() + train);
  split.val.assign(ids.begin() + train, ids.begin() + train + val);
  split.test.assign(ids.begin() + train + val, ids.end());
  return split;
}

std::string format_label_line(const GroundTruthLabel& label) {
  jsonw::Writer w;
  w.begin_object();
  w.key("frame");
  w.value(label.frame);
  w.key("boxes");
  w.begin_array();
  for (const BoundingBox& box : label.boxes) {
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
  }
  w.end_array();
  w.end_object();
  return w.str();
}

GroundTruthLabel parse_label_line(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("labels JSON: ") + e.what());
  }
  try {
    GroundTruthLabel label;
    label.frame = doc.at("frame").get<std::string>();
    for (const auto& item : doc.at("boxes")) {
      BoundingBox box;
      box.x = item.at("x").get<double>();
      box.y = item.at("y").get<double>();
      box.w = item.at("w").get<double>();
      box.h = item.at("h").get<double>();
      if (!(box.w > 0.0) || !(box.h > 0.0)) {
        throw ParseError("labels JSON: ground truth box with non-positive dimensions in frame '" +
                         label.frame + "'");
      }
      label.boxes.push_back(box);
    }
    return label;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("labels JSON: ") + e.what());
  }
}

std::string format_eval_report_json(const EvalSummary& summary,
                                    const std::vector<FrameEval>& per_frame) {
  jsonw::Writer w;
  w.begin_object();
  w.key("average_precision");
  w.value(summary.average_precision);
  w.key("miss_rate");
  w.value(summary.miss_rate);
  w.key("true_positives");
  w.value(summary.true_positives);
  w.key("false_positives");
  w.value(summary.false_positives);
  w.key("false_negatives");
  w.value(summary.false_negatives);
  w.key("pr_curve");
  w.begin_array();
  for (const PrPoint& p : summary.pr_curve) {
    w.begin_array();
    w.value(p.recall);
    w.value(p.precision);
    w.end_array();
  }
  w.end_array();
  w.key("frames");
  w.begin_array();
  for (const FrameEval& f : per_frame) {
    w.begin_object();
    w.key("frame");
    w.value(f.frame);
    w.key("tp");
    w.value(f.true_positives);
    w.key("fp");
    w.value(f.false_positives);
    w.key("fn");
    w.value(f.false_negatives);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

std::vector<GroundTruthLabel> parse_labels_stream(std::istream& in) {
  std::vector<GroundTruthLabel> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_label_line(line));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace thermoguard
