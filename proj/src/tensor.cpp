#include "thermoguard/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <thread>

namespace thermoguard {

namespace {

std::size_t checked_volume(int channels, int height, int width) {
  if (channels < 0 || height < 0 || width < 0) {
    throw ShapeError("tensor dimensions must be non-negative, got (" + std::to_string(channels) +
                     ", " + std::to_string(height) + ", " + std::to_string(width) + ")");
  }
  return static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
         static_cast<std::size_t>(width);
}

void check_conv_layer(const Tensor& input, const ConvLayer& layer) {
  if (layer.out_channels <= 0) {
    throw DomainError("conv layer out_channels must be positive");
  }
  if (layer.stride <= 0) {
    throw DomainError("conv layer stride must be positive");
  }
  if (layer.padding < 0) {
    throw DomainError("conv layer padding must be non-negative");
  }
  const std::size_t want_w = static_cast<std::size_t>(layer.out_channels) * layer.in_channels *
                             ConvLayer::kKernel * ConvLayer::kKernel;
  if (layer.weights.size() != want_w) {
    throw ShapeError("conv weights length " + std::to_string(layer.weights.size()) +
                     " does not match declared shape (" + std::to_string(layer.out_channels) +
                     ", " + std::to_string(layer.in_channels) + ", 3, 3)");
  }
  if (layer.bias.size() != static_cast<std::size_t>(layer.out_channels)) {
    throw ShapeError("conv bias length " + std::to_string(layer.bias.size()) +
                     " does not match out_channels " + std::to_string(layer.out_channels));
  }
  if (input.channels() != layer.in_channels) {
    throw ShapeError("conv input has " + std::to_string(input.channels()) +
                     " channels but the layer expects " + std::to_string(layer.in_channels));
  }
}

// One output channel, full spatial sweep. Accumulation order per output
// element is fixed: bias first, then (ic, ky, kx) ascending.
void conv_channel(const Tensor& input, const ConvLayer& layer, Tensor& out, int oc) {
  const int in_c = layer.in_channels;
  const int h = input.height();
  const int w = input.width();
  const int out_h = out.height();
  const int out_w = out.width();
  const int stride = layer.stride;
  const int pad = layer.padding;
  const float* x = input.data().data();
  const float* wts = layer.weights.data();
  float* dst = out.data().data() + out.index(oc, 0, 0);
  const double bias = layer.bias[oc];

  for (int oy = 0; oy < out_h; ++oy) {
    const int iy0 = oy * stride - pad;
    const bool rows_inside = iy0 >= 0 && iy0 + ConvLayer::kKernel <= h;
    for (int ox = 0; ox < out_w; ++ox) {
      const int ix0 = ox * stride - pad;
      double acc = bias;
      if (rows_inside && ix0 >= 0 && ix0 + ConvLayer::kKernel <= w) {
        for (int ic = 0; ic < in_c; ++ic) {
          const float* plane = x + (static_cast<std::size_t>(ic) * h + iy0) * w + ix0;
          const float* wk = wts + layer.weight_index(oc, ic, 0, 0);
          for (int ky = 0; ky < ConvLayer::kKernel; ++ky) {
            const float* row = plane + static_cast<std::size_t>(ky) * w;
            acc += static_cast<double>(row[0]) * wk[0];
            acc += static_cast<double>(row[1]) * wk[1];
            acc += static_cast<double>(row[2]) * wk[2];
            wk += ConvLayer::kKernel;
          }
        }
      } else {
        for (int ic = 0; ic < in_c; ++ic) {
          for (int ky = 0; ky < ConvLayer::kKernel; ++ky) {
            const int iy = iy0 + ky;
            if (iy < 0 || iy >= h) continue;
            const float* row = x + (static_cast<std::size_t>(ic) * h + iy) * w;
            const float* wk = wts + layer.weight_index(oc, ic, ky, 0);
            for (int kx = 0; kx < ConvLayer::kKernel; ++kx) {
              const int ix = ix0 + kx;
              if (ix < 0 || ix >= w) continue;
              acc += static_cast<double>(row[ix]) * wk[kx];
            }
          }
        }
      }
      dst[static_cast<std::size_t>(oy) * out_w + ox] = static_cast<float>(acc);
    }
  }
}

}  // namespace

Tensor::Tensor(int channels, int height, int width)
    : channels_(channels),
      height_(height),
      width_(width),
      data_(checked_volume(channels, height, width), 0.0f) {}

Tensor::Tensor(int channels, int height, int width, std::vector<float> values)
    : channels_(channels), height_(height), width_(width), data_(std::move(values)) {
  if (data_.size() != checked_volume(channels, height, width)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not equal the shape product " +
                     std::to_string(checked_volume(channels, height, width)));
  }
}

Tensor conv2d(const Tensor& input, const ConvLayer& layer) {
  check_conv_layer(input, layer);
  const int h = input.height();
  const int w = input.width();
  const int span_h = h + 2 * layer.padding;
  const int span_w = w + 2 * layer.padding;
  if (span_h < ConvLayer::kKernel || span_w < ConvLayer::kKernel) {
    throw DegenerateInputError("conv input " + std::to_string(h) + "x" + std::to_string(w) +
                               " with padding " + std::to_string(layer.padding) +
                               " is smaller than the 3x3 kernel");
  }
  const int out_h = (span_h - ConvLayer::kKernel) / layer.stride + 1;
  const int out_w = (span_w - ConvLayer::kKernel) / layer.stride + 1;
  if (out_h < 1 || out_w < 1) {
    throw DegenerateInputError("conv output would be degenerate (" + std::to_string(out_h) + "x" +
                               std::to_string(out_w) + ")");
  }

  Tensor out(layer.out_channels, out_h, out_w);

  // Output channels are independent, so splitting them across threads keeps
  // results bit-identical to the sequential order.
  const std::size_t work = static_cast<std::size_t>(layer.out_channels) * out_h * out_w *
                           layer.in_channels;
  unsigned n_threads = std::thread::hardware_concurrency();
  if (n_threads > 1 && layer.out_channels >= 4 && work >= (1u << 20)) {
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(layer.out_channels));
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t] {
        for (int oc = static_cast<int>(t); oc < layer.out_channels;
             oc += static_cast<int>(n_threads)) {
          conv_channel(input, layer, out, oc);
        }
      });
    }
    for (auto& th : pool) th.join();
  } else {
    for (int oc = 0; oc < layer.out_channels; ++oc) {
      conv_channel(input, layer, out, oc);
    }
  }
  return out;
}

Tensor batch_norm(const Tensor& input, const BatchNormParams& params) {
  const std::size_t c = static_cast<std::size_t>(input.channels());
  if (params.gamma.size() != c || params.beta.size() != c || params.running_mean.size() != c ||
      params.running_var.size() != c) {
    throw ShapeError("batch norm parameter arrays (" + std::to_string(params.gamma.size()) + ", " +
                     std::to_string(params.beta.size()) + ", " +
                     std::to_string(params.running_mean.size()) + ", " +
                     std::to_string(params.running_var.size()) + ") must all have length " +
                     std::to_string(c));
  }
  if (!(params.epsilon > 0.0f)) {
    throw DomainError("batch norm epsilon must be positive");
  }
  for (float v : params.running_var) {
    if (v < 0.0f) {
      throw DomainError("batch norm running variance must be non-negative");
    }
  }

  Tensor out(input.channels(), input.height(), input.width());
  const std::size_t plane = static_cast<std::size_t>(input.height()) * input.width();
  const float* src = input.data().data();
  float* dst = out.data().data();
  for (int ch = 0; ch < input.channels(); ++ch) {
    const double inv_std = 1.0 / std::sqrt(static_cast<double>(params.running_var[ch]) +
                                           static_cast<double>(params.epsilon));
    const double gamma = params.gamma[ch];
    const double beta = params.beta[ch];
    const double mean = params.running_mean[ch];
    const float* s = src + ch * plane;
    float* d = dst + ch * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      d[i] = static_cast<float>(gamma * (static_cast<double>(s[i]) - mean) * inv_std + beta);
    }
  }
  return out;
}

Tensor relu(const Tensor& input) {
  Tensor out = input;
  for (float& v : out.data()) {
    v = v > 0.0f ? v : 0.0f;
  }
  return out;
}

Tensor max_pool2(const Tensor& input) {
  const int h = input.height();
  const int w = input.width();
  if (h < 2 || w < 2) {
    throw DegenerateInputError("max pool needs spatial dims >= 2, got " + std::to_string(h) + "x" +
                               std::to_string(w));
  }
  const int out_h = h / 2;
  const int out_w = w / 2;
  Tensor out(input.channels(), out_h, out_w);
  for (int c = 0; c < input.channels(); ++c) {
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        const float a = input.at(c, 2 * oy, 2 * ox);
        const float b = input.at(c, 2 * oy, 2 * ox + 1);
        const float d = input.at(c, 2 * oy + 1, 2 * ox);
        const float e = input.at(c, 2 * oy + 1, 2 * ox + 1);
        out.at(c, oy, ox) = std::max(std::max(a, b), std::max(d, e));
      }
    }
  }
  return out;
}

ConvLayer fold_batchnorm(const ConvLayer& conv, const BatchNormParams& bn) {
  const std::size_t c = static_cast<std::size_t>(conv.out_channels);
  if (bn.gamma.size() != c || bn.beta.size() != c || bn.running_mean.size() != c ||
      bn.running_var.size() != c) {
    throw ShapeError("fold_batchnorm: parameter arrays of length " +
                     std::to_string(bn.gamma.size()) + " do not match conv out_channels " +
                     std::to_string(c));
  }
  if (!(bn.epsilon > 0.0f)) {
    throw DomainError("batch norm epsilon must be positive");
  }

  ConvLayer folded = conv;
  const std::size_t per_oc =
      static_cast<std::size_t>(conv.in_channels) * ConvLayer::kKernel * ConvLayer::kKernel;
  for (int oc = 0; oc < conv.out_channels; ++oc) {
    const double inv_std = 1.0 / std::sqrt(static_cast<double>(bn.running_var[oc]) +
                                           static_cast<double>(bn.epsilon));
    const double scale = static_cast<double>(bn.gamma[oc]) * inv_std;
    float* w = folded.weights.data() + static_cast<std::size_t>(oc) * per_oc;
    for (std::size_t i = 0; i < per_oc; ++i) {
      w[i] = static_cast<float>(static_cast<double>(w[i]) * scale);
    }
    folded.bias[oc] = static_cast<float>(
        (static_cast<double>(conv.bias[oc]) - static_cast<double>(bn.running_mean[oc])) * scale +
        static_cast<double>(bn.beta[oc]));
  }
  return folded;
}

}  // namespace thermoguard
