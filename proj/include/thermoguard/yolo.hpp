#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "thermoguard/geometry.hpp"
#include "thermoguard/net.hpp"
#include "thermoguard/tensor.hpp"

namespace thermoguard {

struct Anchor {
  double width = 0.0;
  double height = 0.0;
  bool operator==(const Anchor&) const = default;
};

struct AnchorSet {
  std::vector<Anchor> anchors;
  bool operator==(const AnchorSet&) const = default;
  void validate() const;  // count >= 1, all dims > 0
};

// Person-shaped priors at 224 px input; configuration, not ground truth.
AnchorSet default_anchors();

// Comma-separated WxH entries, e.g. "24x64,40x104,72x168".
AnchorSet parse_anchor_list(const std::string& text);
std::string format_anchor_list(const AnchorSet& set);

struct Detection {
  BoundingBox box;
  double score = 0.0;
  int class_id = 0;
  bool operator==(const Detection&) const = default;
};

struct DecodeConfig {
  double confidence_threshold = 0.5;
  double nms_iou_threshold = 0.5;
  int input_size = 224;
  bool operator==(const DecodeConfig&) const = default;
  void validate() const;  // thresholds in [0,1], input_size > 0
};

// 1x1 convolution mapping the backbone feature map to B*(5+C) channels.
// Weight layout: weights[oc * in_channels + ic].
struct DetectionHead {
  int out_channels = 0;
  int in_channels = 0;
  std::vector<float> weights;
  std::vector<float> bias;
  bool operator==(const DetectionHead&) const = default;
};

// Zero-initialized head sized for the anchor count; C classes (default 1).
DetectionHead zero_head(int in_channels, int anchor_count, int num_classes = 1);

// Same shape with small uniform weights; the same seed always gives the
// same parameters.
DetectionHead seeded_head(int in_channels, int anchor_count, int num_classes,
                          std::uint64_t seed);

// 1x1 conv, f64 accumulation in fixed channel order.
Tensor apply_head(const Tensor& feature, const DetectionHead& head);

// Per anchor b the raw channels at base b*(5+C) hold, in order:
// tx, ty, tw, th, objectness logit, then C class logits.
// center = (cell + sigmoid(t)) * stride; size = anchor * exp(t);
// score = sigmoid(t_obj) * softmax(class logits)[argmax].
// Emits one detection per (cell, anchor) with score >= confidence_threshold,
// cells in row-major order, anchors innermost; boxes are not clipped here.
std::vector<Detection> decode(const Tensor& raw, const AnchorSet& anchors,
                              const DecodeConfig& cfg);

double iou(const BoundingBox& a, const BoundingBox& b);

// Greedy: sort by score desc (ties: smaller x, then y), keep a box iff its IoU
// with every kept box of the same class is < iou_threshold.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold);

// forward -> apply_head -> decode -> nms -> clip to the frame rectangle.
std::vector<Detection> detect(const Tensor& frame, const NetworkSpec& net,
                              const DetectionHead& head, const AnchorSet& anchors,
                              const DecodeConfig& cfg);

struct FrameDetections {
  std::string frame;
  std::vector<Detection> detections;
  bool operator==(const FrameDetections&) const = default;
};

std::string class_label(int class_id);               // 0 -> "person"
int class_id_from_label(const std::string& label);   // inverse; ParseError otherwise

std::string format_frame_detections(const FrameDetections& fd);
FrameDetections parse_frame_detections(const std::string& json_text);
// One JSON object per non-empty line.
std::vector<FrameDetections> parse_detections_stream(std::istream& in);

}  // namespace thermoguard
