#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "thermoguard/tensor.hpp"

namespace thermoguard {

struct ReluLayer {};

/// Fixed 2x2 window, 2x2 stride.
struct MaxPoolLayer {};

using LayerVariant = std::variant<ConvLayer, BatchNormParams, ReluLayer, MaxPoolLayer>;

struct NamedLayer {
  std::string name;
  LayerVariant layer;
};

/// Ordered layer stack plus the name of the feature-extraction layer.
/// The synthetic name "input" always refers to the unmodified input tensor.
struct NetworkSpec {
  std::vector<NamedLayer> layers;
  std::string feature_layer_name = "ReLU_5";

  /// Throws ConfigError when names collide, the feature layer is missing,
  /// or channel counts do not chain consistently.
  void validate() const;
};

struct ForwardResult {
  std::map<std::string, Tensor> activations;  // includes "input"
  Tensor feature;
};

/// Applies the layers in order, recording every named activation. A layer
/// failure is rethrown with the layer's name attached. An empty layer list
/// returns the input itself as the feature.
ForwardResult forward(const NetworkSpec& net, const Tensor& input);

/// Text form: one layer per line, `name kind key=value...`.
/// Kinds: conv (out_channels, in_channels, stride, padding),
/// bn (channels, epsilon), relu, pool. Lines starting with '#' are comments.
/// Unspecified channel counts are inferred from the preceding layers; the
/// first conv defaults to 3 input channels.
NetworkSpec parse_netspec_text(const std::string& text);
std::string format_netspec_text(const NetworkSpec& net);

/// Picks the feature layer for a freshly parsed or loaded network: keeps
/// ReLU_5 when such a layer exists, otherwise uses the last layer.
void resolve_feature_layer(NetworkSpec& net);

/// Structural comparison (names, kinds, dimensions, stride/padding) that
/// ignores parameter values. Throws ConfigError naming the first mismatch.
void check_same_structure(const NetworkSpec& actual, const NetworkSpec& declared);

/// The default 19-layer backbone: four Conv-BN-ReLU-Pool blocks (16, 32, 64,
/// 128 filters) and a final Conv(256)-BN-ReLU block whose activation ReLU_5
/// is the feature layer. Stride 16 overall: a 3x224x224 input yields a
/// 256x14x14 feature map. Parameters are seeded pseudo-randomly; the same
/// seed always produces the same network.
NetworkSpec reference_backbone(std::uint64_t seed = 0);

}  // namespace thermoguard
