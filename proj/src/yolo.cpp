#include "thermoguard/yolo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <random>

#include "nlohmann/json.hpp"
#include "thermoguard/errors.hpp"
#include "thermoguard/json_writer.hpp"

namespace thermoguard {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool decode_order_before(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.box.x != b.box.x) return a.box.x < b.box.x;
  if (a.box.y != b.box.y) return a.box.y < b.box.y;
  if (a.box.w != b.box.w) return a.box.w < b.box.w;
  if (a.box.h != b.box.h) return a.box.h < b.box.h;
  return a.class_id < b.class_id;
}

}  // namespace

void AnchorSet::validate() const {
  if (anchors.empty()) {
    throw DomainError("anchor set is empty");
  }
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (!(anchors[i].width > 0.0) || !(anchors[i].height > 0.0)) {
      throw DomainError("anchor " + std::to_string(i) + " has non-positive dimensions");
    }
  }
}

AnchorSet default_anchors() {
  return AnchorSet{{{24.0, 64.0}, {40.0, 104.0}, {72.0, 168.0}}};
}

AnchorSet parse_anchor_list(const std::string& text) {
  AnchorSet set;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    const std::size_t x = item.find('x');
    if (x == std::string::npos || x == 0 || x + 1 == item.size()) {
      throw ParseError("anchor entry '" + item + "' is not WxH");
    }
    Anchor a;
    const auto parse_part = [&](const std::string& part) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
      if (ec != std::errc() || ptr != part.data() + part.size()) {
        throw ParseError("anchor entry '" + item + "' is not WxH");
      }
      return v;
    };
    a.width = parse_part(item.substr(0, x));
    a.height = parse_part(item.substr(x + 1));
    set.anchors.push_back(a);
    pos = comma + 1;
  }
  set.validate();
  return set;
}

std::string format_anchor_list(const AnchorSet& set) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < set.anchors.size(); ++i) {
    if (i > 0) out += ',';
    std::snprintf(buf, sizeof(buf), "%.17g", set.anchors[i].width);
    out += buf;
    out += 'x';
    std::snprintf(buf, sizeof(buf), "%.17g", set.anchors[i].height);
    out += buf;
  }
  return out;
}

void DecodeConfig::validate() const {
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
    throw DomainError("confidence_threshold must be in [0,1]");
  }
  if (!(nms_iou_threshold >= 0.0 && nms_iou_threshold <= 1.0)) {
    throw DomainError("nms_iou_threshold must be in [0,1]");
  }
  if (input_size <= 0) {
    throw DomainError("input_size must be positive");
  }
}

DetectionHead zero_head(int in_channels, int anchor_count, int num_classes) {
  if (in_channels <= 0 || anchor_count <= 0 || num_classes <= 0) {
    throw DomainError("detection head dimensions must be positive");
  }
  DetectionHead head;
  head.in_channels = in_channels;
  head.out_channels = anchor_count * (5 + num_classes);
  head.weights.assign(static_cast<std::size_t>(head.out_channels) * in_channels, 0.0f);
  head.bias.assign(static_cast<std::size_t>(head.out_channels), 0.0f);
  return head;
}

DetectionHead seeded_head(int in_channels, int anchor_count, int num_classes,
                          std::uint64_t seed) {
  DetectionHead head = zero_head(in_channels, anchor_count, num_classes);
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_channels));
  for (float& w : head.weights) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    w = static_cast<float>((2.0 * u - 1.0) * bound);
  }
  return head;
}

Tensor apply_head(const Tensor& feature, const DetectionHead& head) {
  if (head.in_channels != feature.channels()) {
    throw ShapeError("detection head expects " + std::to_string(head.in_channels) +
                     " input channels, feature map has " + std::to_string(feature.channels()));
  }
  if (head.weights.size() !=
          static_cast<std::size_t>(head.out_channels) * head.in_channels ||
      head.bias.size() != static_cast<std::size_t>(head.out_channels)) {
    throw ShapeError("detection head parameter sizes do not match its declared shape");
  }
  Tensor out(head.out_channels, feature.height(), feature.width());
  const std::size_t plane = static_cast<std::size_t>(feature.height()) * feature.width();
  const float* src = feature.data().data();
  for (int oc = 0; oc < head.out_channels; ++oc) {
    const float* w = head.weights.data() + static_cast<std::size_t>(oc) * head.in_channels;
    float* dst = out.data().data() + static_cast<std::size_t>(oc) * plane;
    for (std::size_t p = 0; p < plane; ++p) {
      double acc = static_cast<double>(head.bias[static_cast<std::size_t>(oc)]);
      for (int ic = 0; ic < head.in_channels; ++ic) {
        acc += static_cast<double>(src[static_cast<std::size_t>(ic) * plane + p]) *
               static_cast<double>(w[ic]);
      }
      dst[p] = static_cast<float>(acc);
    }
  }
  return out;
}

std::vector<Detection> decode(const Tensor& raw, const AnchorSet& anchors,
                              const DecodeConfig& cfg) {
  anchors.validate();
  cfg.validate();
  const int b_count = static_cast<int>(anchors.anchors.size());
  if (raw.channels() % b_count != 0) {
    throw ShapeError("raw prediction has " + std::to_string(raw.channels()) +
                     " channels, not divisible by " + std::to_string(b_count) + " anchors");
  }
  const int per_anchor = raw.channels() / b_count;
  if (per_anchor < 6) {
    throw ShapeError("raw prediction provides " + std::to_string(per_anchor) +
                     " channels per anchor; need at least 6 (box, objectness, one class)");
  }
  const int num_classes = per_anchor - 5;
  if (cfg.input_size % raw.width() != 0 || cfg.input_size % raw.height() != 0) {
    throw ShapeError("grid " + std::to_string(raw.width()) + "x" + std::to_string(raw.height()) +
                     " does not divide input size " + std::to_string(cfg.input_size));
  }
  const double stride_x = static_cast<double>(cfg.input_size) / raw.width();
  const double stride_y = static_cast<double>(cfg.input_size) / raw.height();

  std::vector<Detection> out;
  std::vector<double> cls(static_cast<std::size_t>(num_classes));
  for (int row = 0; row < raw.height(); ++row) {
    for (int col = 0; col < raw.width(); ++col) {
      for (int b = 0; b < b_count; ++b) {
        const int base = b * per_anchor;
        const double tx = raw.at(base + 0, row, col);
        const double ty = raw.at(base + 1, row, col);
        const double tw = raw.at(base + 2, row, col);
        const double th = raw.at(base + 3, row, col);
        const double tobj = raw.at(base + 4, row, col);

        // Softmax over class logits; single-class inputs degenerate to exactly 1.
        int best = 0;
        double best_logit = raw.at(base + 5, row, col);
        for (int c = 1; c < num_classes; ++c) {
          const double logit = raw.at(base + 5 + c, row, col);
          if (logit > best_logit) {
            best_logit = logit;
            best = c;
          }
        }
        double class_prob = 1.0;
        if (num_classes > 1) {
          double denom = 0.0;
          for (int c = 0; c < num_classes; ++c) {
            cls[static_cast<std::size_t>(c)] =
                std::exp(static_cast<double>(raw.at(base + 5 + c, row, col)) - best_logit);
            denom += cls[static_cast<std::size_t>(c)];
          }
          class_prob = cls[static_cast<std::size_t>(best)] / denom;
        }

        const double score = sigmoid(tobj) * class_prob;
        if (score < cfg.confidence_threshold) continue;

        const double cx = (col + sigmoid(tx)) * stride_x;
        const double cy = (row + sigmoid(ty)) * stride_y;
        const double w = anchors.anchors[static_cast<std::size_t>(b)].width * std::exp(tw);
        const double h = anchors.anchors[static_cast<std::size_t>(b)].height * std::exp(th);
        out.push_back({{cx - w / 2.0, cy - h / 2.0, w, h}, score, best});
      }
    }
  }
  return out;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  if (!(a.w > 0.0) || !(a.h > 0.0) || !(b.w > 0.0) || !(b.h > 0.0)) {
    throw DomainError("iou requires positive box dimensions");
  }
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  return inter / (a.w * a.h + b.w * b.h - inter);
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold) {
  std::sort(dets.begin(), dets.end(), decode_order_before);
  std::vector<Detection> kept;
  kept.reserve(dets.size());
  for (const Detection& cand : dets) {
    bool keep = true;
    for (const Detection& k : kept) {
      if (k.class_id == cand.class_id && iou(k.box, cand.box) >= iou_threshold) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(cand);
  }
  return kept;
}

std::vector<Detection> detect(const Tensor& frame, const NetworkSpec& net,
                              const DetectionHead& head, const AnchorSet& anchors,
                              const DecodeConfig& cfg) {
  const ForwardResult fwd = forward(net, frame);
  const Tensor raw = apply_head(fwd.feature, head);
  std::vector<Detection> dets = decode(raw, anchors, cfg);
  dets = nms(std::move(dets), cfg.nms_iou_threshold);
  // Clip after NMS so overlap decisions see the decoded geometry. Decoded
  // centers are strictly inside the image, so clipped boxes stay non-empty.
  const double fw = frame.width();
  const double fh = frame.height();
  for (Detection& d : dets) {
    const double x0 = std::max(0.0, d.box.x);
    const double y0 = std::max(0.0, d.box.y);
    const double x1 = std::min(fw, d.box.x + d.box.w);
    const double y1 = std::min(fh, d.box.y + d.box.h);
    d.box = {x0, y0, x1 - x0, y1 - y0};
  }
  return dets;
}

std::string class_label(int class_id) {
  if (class_id == 0) return "person";
  return "class_" + std::to_string(class_id);
}

int class_id_from_label(const std::string& label) {
  if (label == "person") return 0;
  if (label.rfind("class_", 0) == 0) {
    const std::string digits = label.substr(6);
    int id = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), id);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && id >= 0) return id;
  }
  throw ParseError("unknown detection class label '" + label + "'");
}

std::string format_frame_detections(const FrameDetections& fd) {
  jsonw::Writer w;
  w.begin_object();
  w.key("frame");
  w.value(fd.frame);
  w.key("detections");
  w.begin_array();
  for (const Detection& d : fd.detections) {
    w.begin_object();
    w.key("x");
    w.value(d.box.x);
    w.key("y");
    w.value(d.box.y);
    w.key("w");
    w.value(d.box.w);
    w.key("h");
    w.value(d.box.h);
    w.key("score");
    w.value(d.score);
    w.key("class");
    w.value(class_label(d.class_id));
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

FrameDetections parse_frame_detections(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("detections JSON: ") + e.what());
  }
  try {
    FrameDetections fd;
    fd.frame = doc.at("frame").get<std::string>();
    for (const auto& item : doc.at("detections")) {
      Detection d;
      d.box.x = item.at("x").get<double>();
      d.box.y = item.at("y").get<double>();
      d.box.w = item.at("w").get<double>();
      d.box.h = item.at("h").get<double>();
      d.score = item.at("score").get<double>();
      d.class_id = item.contains("class") ? class_id_from_label(item.at("class").get<std::string>())
                                          : 0;
      fd.detections.push_back(d);
    }
    return fd;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("detections JSON: ") + e.what());
  }
}

std::vector<FrameDetections> parse_detections_stream(std::istream& in) {
  std::vector<FrameDetections> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_frame_detections(line));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace thermoguard
