#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

#include "thermoguard/errors.hpp"

namespace thermoguard {

/// Dense 3-D array of f32 values, channel-major then row-major.
/// Index of element (c, y, x) is (c*height + y)*width + x.
class Tensor {
 public:
  Tensor() = default;

  /// Zero-filled tensor. Throws ShapeError on negative dimensions.
  Tensor(int channels, int height, int width);

  /// Adopts `values`; its length must equal channels*height*width.
  Tensor(int channels, int height, int width, std::vector<float> values);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float at(int c, int y, int x) const {
    assert(c >= 0 && c < channels_ && y >= 0 && y < height_ && x >= 0 && x < width_);
    return data_[index(c, y, x)];
  }
  float& at(int c, int y, int x) {
    assert(c >= 0 && c < channels_ && y >= 0 && y < height_ && x >= 0 && x < width_);
    return data_[index(c, y, x)];
  }

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  bool operator==(const Tensor&) const = default;

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

/// 3x3 convolution layer with zero padding outside the image.
struct ConvLayer {
  static constexpr int kKernel = 3;

  int out_channels = 0;
  int in_channels = 0;
  int stride = 1;
  int padding = 1;
  std::vector<float> weights;  // (out_channels, in_channels, 3, 3)
  std::vector<float> bias;     // (out_channels)

  std::size_t weight_index(int oc, int ic, int ky, int kx) const {
    return ((static_cast<std::size_t>(oc) * in_channels + ic) * kKernel + ky) * kKernel + kx;
  }
};

/// Inference-time batch normalization parameters, one entry per channel.
struct BatchNormParams {
  std::vector<float> gamma;
  std::vector<float> beta;
  std::vector<float> running_mean;
  std::vector<float> running_var;
  float epsilon = 1e-5f;
};

/// y[c] = gamma[c] * (x[c] - mean[c]) / sqrt(var[c] + eps) + beta[c].
Tensor batch_norm(const Tensor& input, const BatchNormParams& params);

/// Same-order 3x3 convolution; accumulation per output element runs in f64
/// over (in_channel, ky, kx) with the bias as the starting term, so results
/// are bit-identical regardless of internal parallelism.
Tensor conv2d(const Tensor& input, const ConvLayer& layer);

/// Elementwise max(0, x).
Tensor relu(const Tensor& input);

/// 2x2 max pooling with stride 2; a trailing odd row/column is dropped.
Tensor max_pool2(const Tensor& input);

/// Returns a convolution layer equivalent to batch_norm(conv2d(x, conv), bn).
ConvLayer fold_batchnorm(const ConvLayer& conv, const BatchNormParams& bn);

}  // namespace thermoguard
