#include "thermoguard/net.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace thermoguard {

namespace {

const char* kind_name(const LayerVariant& layer) {
  if (std::holds_alternative<ConvLayer>(layer)) return "conv";
  if (std::holds_alternative<BatchNormParams>(layer)) return "bn";
  if (std::holds_alternative<ReluLayer>(layer)) return "relu";
  return "pool";
}

[[noreturn]] void line_error(std::size_t line_no, const std::string& what) {
  throw ParseError("netspec line " + std::to_string(line_no) + ": " + what);
}

long parse_long(const std::string& value, std::size_t line_no, const std::string& key) {
  long out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    line_error(line_no, "key '" + key + "' has a non-integer value '" + value + "'");
  }
  return out;
}

double parse_double(const std::string& value, std::size_t line_no, const std::string& key) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    line_error(line_no, "key '" + key + "' has a non-numeric value '" + value + "'");
  }
  return out;
}

// Uniform in [0,1) from the top 53 bits; bit-exact on every platform.
double next_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

ConvLayer seeded_conv(int out_channels, int in_channels, std::mt19937_64& rng) {
  ConvLayer conv;
  conv.out_channels = out_channels;
  conv.in_channels = in_channels;
  conv.weights.resize(static_cast<std::size_t>(out_channels) * in_channels * ConvLayer::kKernel *
                      ConvLayer::kKernel);
  conv.bias.assign(static_cast<std::size_t>(out_channels), 0.0f);
  const double bound =
      1.0 / std::sqrt(static_cast<double>(in_channels) * ConvLayer::kKernel * ConvLayer::kKernel);
  for (float& w : conv.weights) {
    w = static_cast<float>((2.0 * next_uniform(rng) - 1.0) * bound);
  }
  return conv;
}

BatchNormParams identity_bn(int channels) {
  BatchNormParams bn;
  bn.gamma.assign(static_cast<std::size_t>(channels), 1.0f);
  bn.beta.assign(static_cast<std::size_t>(channels), 0.0f);
  bn.running_mean.assign(static_cast<std::size_t>(channels), 0.0f);
  bn.running_var.assign(static_cast<std::size_t>(channels), 1.0f);
  bn.epsilon = 1e-5f;
  return bn;
}

}  // namespace

void NetworkSpec::validate() const {
  std::set<std::string> names;
  int channels = -1;  // unknown until the first layer that pins it
  for (const NamedLayer& entry : layers) {
    if (entry.name.empty()) {
      throw ConfigError("network layer with an empty name");
    }
    if (entry.name == "input") {
      throw ConfigError("layer name 'input' is reserved for the input tensor");
    }
    if (!names.insert(entry.name).second) {
      throw ConfigError("duplicate layer name '" + entry.name + "'");
    }
    if (const auto* conv = std::get_if<ConvLayer>(&entry.layer)) {
      if (channels >= 0 && conv->in_channels != channels) {
        throw ConfigError("layer '" + entry.name + "' expects " +
                          std::to_string(conv->in_channels) + " input channels but the chain " +
                          "provides " + std::to_string(channels));
      }
      channels = conv->out_channels;
    } else if (const auto* bn = std::get_if<BatchNormParams>(&entry.layer)) {
      const int len = static_cast<int>(bn->gamma.size());
      if (channels >= 0 && len != channels) {
        throw ConfigError("layer '" + entry.name + "' has " + std::to_string(len) +
                          " channels but the chain provides " + std::to_string(channels));
      }
      if (channels < 0) channels = len;
    }
  }
  if (!layers.empty() && feature_layer_name != "input" && !names.count(feature_layer_name)) {
    throw ConfigError("feature layer '" + feature_layer_name + "' not found in the network");
  }
}

ForwardResult forward(const NetworkSpec& net, const Tensor& input) {
  net.validate();
  ForwardResult result;
  result.activations.emplace("input", input);

  Tensor current = input;
  for (const NamedLayer& entry : net.layers) {
    try {
      if (const auto* conv = std::get_if<ConvLayer>(&entry.layer)) {
        current = conv2d(current, *conv);
      } else if (const auto* bn = std::get_if<BatchNormParams>(&entry.layer)) {
        current = batch_norm(current, *bn);
      } else if (std::holds_alternative<ReluLayer>(entry.layer)) {
        current = relu(current);
      } else {
        current = max_pool2(current);
      }
    } catch (const ShapeError& e) {
      throw ShapeError("layer '" + entry.name + "': " + e.what());
    } catch (const DegenerateInputError& e) {
      throw DegenerateInputError("layer '" + entry.name + "': " + e.what());
    } catch (const Error& e) {
      throw Error("layer '" + entry.name + "': " + e.what());
    }
    result.activations.emplace(entry.name, current);
  }

  if (net.layers.empty()) {
    result.feature = input;
  } else {
    result.feature = result.activations.at(net.feature_layer_name);
  }
  return result;
}

NetworkSpec parse_netspec_text(const std::string& text) {
  NetworkSpec net;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  int channels = 3;  // image input default

  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::string name;
    if (!(tokens >> name) || name[0] == '#') continue;
    std::string kind;
    if (!(tokens >> kind)) {
      line_error(line_no, "expected `name kind key=value...`");
    }

    std::map<std::string, std::string> kv;
    std::string token;
    while (tokens >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos || eq == 0) {
        line_error(line_no, "malformed key=value token '" + token + "'");
      }
      kv[token.substr(0, eq)] = token.substr(eq + 1);
    }
    auto take = [&](const char* key) {
      auto it = kv.find(key);
      if (it == kv.end()) return std::string();
      std::string v = it->second;
      kv.erase(it);
      return v;
    };

    if (kind == "conv") {
      ConvLayer conv;
      const std::string out_s = take("out_channels");
      if (out_s.empty()) line_error(line_no, "conv layer requires out_channels");
      conv.out_channels = static_cast<int>(parse_long(out_s, line_no, "out_channels"));
      const std::string in_s = take("in_channels");
      conv.in_channels = in_s.empty() ? channels
                                      : static_cast<int>(parse_long(in_s, line_no, "in_channels"));
      const std::string stride_s = take("stride");
      if (!stride_s.empty()) conv.stride = static_cast<int>(parse_long(stride_s, line_no, "stride"));
      const std::string pad_s = take("padding");
      if (!pad_s.empty()) conv.padding = static_cast<int>(parse_long(pad_s, line_no, "padding"));
      if (conv.out_channels <= 0 || conv.in_channels <= 0) {
        line_error(line_no, "conv channel counts must be positive");
      }
      conv.weights.assign(static_cast<std::size_t>(conv.out_channels) * conv.in_channels *
                              ConvLayer::kKernel * ConvLayer::kKernel,
                          0.0f);
      conv.bias.assign(static_cast<std::size_t>(conv.out_channels), 0.0f);
      channels = conv.out_channels;
      net.layers.push_back({name, std::move(conv)});
    } else if (kind == "bn") {
      const std::string ch_s = take("channels");
      const int ch = ch_s.empty() ? channels : static_cast<int>(parse_long(ch_s, line_no, "channels"));
      if (ch <= 0) line_error(line_no, "bn channel count must be positive");
      BatchNormParams bn = identity_bn(ch);
      const std::string eps_s = take("epsilon");
      if (!eps_s.empty()) bn.epsilon = static_cast<float>(parse_double(eps_s, line_no, "epsilon"));
      channels = ch;
      net.layers.push_back({name, std::move(bn)});
    } else if (kind == "relu") {
      net.layers.push_back({name, ReluLayer{}});
    } else if (kind == "pool") {
      net.layers.push_back({name, MaxPoolLayer{}});
    } else {
      line_error(line_no, "unknown layer kind '" + kind + "'");
    }
    if (!kv.empty()) {
      line_error(line_no, "unknown key '" + kv.begin()->first + "' for kind '" + kind + "'");
    }
  }
  resolve_feature_layer(net);
  net.validate();
  return net;
}

void resolve_feature_layer(NetworkSpec& net) {
  if (net.layers.empty()) {
    net.feature_layer_name = "input";
    return;
  }
  for (const NamedLayer& entry : net.layers) {
    if (entry.name == "ReLU_5") {
      net.feature_layer_name = "ReLU_5";
      return;
    }
  }
  net.feature_layer_name = net.layers.back().name;
}

std::string format_netspec_text(const NetworkSpec& net) {
  std::string out;
  for (const NamedLayer& entry : net.layers) {
    out += entry.name;
    if (const auto* conv = std::get_if<ConvLayer>(&entry.layer)) {
      out += " conv out_channels=" + std::to_string(conv->out_channels) +
             " in_channels=" + std::to_string(conv->in_channels) +
             " stride=" + std::to_string(conv->stride) +
             " padding=" + std::to_string(conv->padding);
    } else if (const auto* bn = std::get_if<BatchNormParams>(&entry.layer)) {
      char eps[32];
      std::snprintf(eps, sizeof(eps), "%g", static_cast<double>(bn->epsilon));
      out += " bn channels=" + std::to_string(bn->gamma.size()) + " epsilon=" + eps;
    } else if (std::holds_alternative<ReluLayer>(entry.layer)) {
      out += " relu";
    } else {
      out += " pool";
    }
    out += '\n';
  }
  return out;
}

void check_same_structure(const NetworkSpec& actual, const NetworkSpec& declared) {
  if (actual.layers.size() != declared.layers.size()) {
    throw ConfigError("network has " + std::to_string(actual.layers.size()) +
                      " layers but the declaration lists " +
                      std::to_string(declared.layers.size()));
  }
  for (std::size_t i = 0; i < actual.layers.size(); ++i) {
    const NamedLayer& a = actual.layers[i];
    const NamedLayer& d = declared.layers[i];
    if (a.name != d.name) {
      throw ConfigError("layer " + std::to_string(i) + " is named '" + a.name +
                        "' but the declaration says '" + d.name + "'");
    }
    if (a.layer.index() != d.layer.index()) {
      throw ConfigError("layer '" + a.name + "' is " + kind_name(a.layer) +
                        " but the declaration says " + kind_name(d.layer));
    }
    if (const auto* ac = std::get_if<ConvLayer>(&a.layer)) {
      const auto& dc = std::get<ConvLayer>(d.layer);
      if (ac->out_channels != dc.out_channels || ac->in_channels != dc.in_channels ||
          ac->stride != dc.stride || ac->padding != dc.padding) {
        throw ConfigError("conv layer '" + a.name + "' dimensions differ from the declaration");
      }
    } else if (const auto* ab = std::get_if<BatchNormParams>(&a.layer)) {
      const auto& db = std::get<BatchNormParams>(d.layer);
      if (ab->gamma.size() != db.gamma.size()) {
        throw ConfigError("bn layer '" + a.name + "' channel count differs from the declaration");
      }
    }
  }
}

NetworkSpec reference_backbone(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  NetworkSpec net;
  const int filters[] = {16, 32, 64, 128, 256};
  int in_channels = 3;
  for (int block = 0; block < 5; ++block) {
    const std::string n = std::to_string(block + 1);
    net.layers.push_back({"Conv_" + n, seeded_conv(filters[block], in_channels, rng)});
    net.layers.push_back({"BatchNorm_" + n, identity_bn(filters[block])});
    net.layers.push_back({"ReLU_" + n, ReluLayer{}});
    if (block < 4) {
      net.layers.push_back({"MaxPool_" + n, MaxPoolLayer{}});
    }
    in_channels = filters[block];
  }
  net.feature_layer_name = "ReLU_5";
  return net;
}

}  // namespace thermoguard
