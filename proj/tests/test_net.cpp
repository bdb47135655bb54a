#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>
#include <string>
#include <variant>

#include "doctest.h"
#include "test_util.hpp"
#include "thermoguard/errors.hpp"
#include "thermoguard/model_io.hpp"
#include "thermoguard/net.hpp"
#include "thermoguard/yolo.hpp"

using namespace thermoguard;
using testutil::random_tensor;

namespace {

NetworkSpec tiny_net() {
  NetworkSpec net;
  ConvLayer conv;
  conv.in_channels = 1;
  conv.out_channels = 2;
  conv.weights.assign(2 * 1 * 9, 0.01f);
  conv.bias = {0.0f, 0.1f};
  BatchNormParams bn;
  bn.gamma.assign(2, 1.0f);
  bn.beta.assign(2, 0.0f);
  bn.running_mean.assign(2, 0.0f);
  bn.running_var.assign(2, 1.0f);
  net.layers.push_back({"Conv_1", conv});
  net.layers.push_back({"BatchNorm_1", bn});
  net.layers.push_back({"ReLU_1", ReluLayer{}});
  net.layers.push_back({"MaxPool_1", MaxPoolLayer{}});
  net.feature_layer_name = "MaxPool_1";
  return net;
}

}  // namespace

TEST_CASE("reference_backbone reduces 3x224x224 to 256x14x14") {
  const NetworkSpec net = reference_backbone(0);
  net.validate();
  std::mt19937_64 rng(7);
  const Tensor in = random_tensor(rng, 3, 224, 224);
  const ForwardResult result = forward(net, in);
  CHECK(result.feature.channels() == 256);
  CHECK(result.feature.height() == 14);
  CHECK(result.feature.width() == 14);
}

TEST_CASE("reference_backbone shape also holds for a 32x32 input") {
  const NetworkSpec net = reference_backbone(0);
  std::mt19937_64 rng(8);
  const Tensor in = random_tensor(rng, 3, 32, 32);
  const ForwardResult result = forward(net, in);
  CHECK(result.feature.channels() == 256);
  CHECK(result.feature.height() == 2);
  CHECK(result.feature.width() == 2);
}

TEST_CASE("reference_backbone is deterministic per seed and differs across seeds") {
  const NetworkSpec a = reference_backbone(5);
  const NetworkSpec b = reference_backbone(5);
  const NetworkSpec c = reference_backbone(6);
  REQUIRE(a.layers.size() == b.layers.size());
  const auto& wa = std::get<ConvLayer>(a.layers[0].layer).weights;
  const auto& wb = std::get<ConvLayer>(b.layers[0].layer).weights;
  const auto& wc = std::get<ConvLayer>(c.layers[0].layer).weights;
  CHECK(wa == wb);
  CHECK(wa != wc);

  std::mt19937_64 rng(9);
  const Tensor in = random_tensor(rng, 3, 32, 32);
  const ForwardResult ra = forward(a, in);
  const ForwardResult rb = forward(b, in);
  CHECK(ra.feature == rb.feature);
}

TEST_CASE("forward records every named activation including the input") {
  const NetworkSpec net = tiny_net();
  std::mt19937_64 rng(10);
  const Tensor in = random_tensor(rng, 1, 8, 8);
  const ForwardResult result = forward(net, in);
  REQUIRE(result.activations.count("input") == 1);
  CHECK(result.activations.at("input") == in);
  for (const NamedLayer& layer : net.layers) {
    CHECK(result.activations.count(layer.name) == 1);
  }
  CHECK(result.feature == result.activations.at("MaxPool_1"));
  CHECK(result.feature.height() == 4);
}

TEST_CASE("forward with no layers returns the input as the feature") {
  NetworkSpec net;
  net.feature_layer_name = "input";
  std::mt19937_64 rng(11);
  const Tensor in = random_tensor(rng, 2, 3, 3);
  const ForwardResult result = forward(net, in);
  CHECK(result.feature == in);
}

TEST_CASE("forward attaches the failing layer's name to errors") {
  NetworkSpec net = tiny_net();
  std::mt19937_64 rng(12);
  const Tensor wrong_channels = random_tensor(rng, 3, 8, 8);
  try {
    forward(net, wrong_channels);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("Conv_1") != std::string::npos);
  }
}

TEST_CASE("validate rejects structural problems") {
  SUBCASE("duplicate names") {
    NetworkSpec net = tiny_net();
    net.layers[1].name = "Conv_1";
    CHECK_THROWS_AS(net.validate(), ConfigError);
  }
  SUBCASE("reserved input name") {
    NetworkSpec net = tiny_net();
    net.layers[0].name = "input";
    CHECK_THROWS_AS(net.validate(), ConfigError);
  }
  SUBCASE("missing feature layer") {
    NetworkSpec net = tiny_net();
    net.feature_layer_name = "nope";
    CHECK_THROWS_AS(net.validate(), ConfigError);
  }
  SUBCASE("broken channel chain") {
    NetworkSpec net = tiny_net();
    std::get<BatchNormParams>(net.layers[1].layer).gamma.push_back(0.0f);
    std::get<BatchNormParams>(net.layers[1].layer).beta.push_back(0.0f);
    std::get<BatchNormParams>(net.layers[1].layer).running_mean.push_back(0.0f);
    std::get<BatchNormParams>(net.layers[1].layer).running_var.push_back(1.0f);
    CHECK_THROWS_AS(net.validate(), ConfigError);
  }
}

TEST_CASE("netspec text round-trips through parse and format") {
  const NetworkSpec net = reference_backbone(3);
  const std::string text = format_netspec_text(net);
  const NetworkSpec parsed = parse_netspec_text(text);
  CHECK_NOTHROW(check_same_structure(net, parsed));
  CHECK(parsed.feature_layer_name == net.feature_layer_name);
}

TEST_CASE("parse_netspec_text infers channels and skips comments") {
  const std::string text =
      "# backbone\n"
      "Conv_1 conv out_channels=4\n"
      "BatchNorm_1 bn\n"
      "ReLU_1 relu\n"
      "MaxPool_1 pool\n"
      "Conv_2 conv out_channels=8 stride=2 padding=0\n";
  const NetworkSpec net = parse_netspec_text(text);
  REQUIRE(net.layers.size() == 5);
  const auto& conv1 = std::get<ConvLayer>(net.layers[0].layer);
  CHECK(conv1.in_channels == 3);
  CHECK(conv1.out_channels == 4);
  CHECK(conv1.stride == 1);
  CHECK(conv1.padding == 1);
  const auto& bn = std::get<BatchNormParams>(net.layers[1].layer);
  CHECK(bn.gamma.size() == 4);
  const auto& conv2 = std::get<ConvLayer>(net.layers[4].layer);
  CHECK(conv2.in_channels == 4);
  CHECK(conv2.stride == 2);
  CHECK(conv2.padding == 0);
  // No ReLU_5 here, so the last layer becomes the feature layer.
  CHECK(net.feature_layer_name == "Conv_2");
}

TEST_CASE("parse_netspec_text rejects malformed input") {
  CHECK_THROWS_AS(parse_netspec_text("Conv_1 conv\n"), ParseError);           // missing out_channels
  CHECK_THROWS_AS(parse_netspec_text("Conv_1 warp out_channels=2\n"), ParseError);  // unknown kind
  CHECK_THROWS_AS(parse_netspec_text("Conv_1 conv out_channels=2 tilt=9\n"), ParseError);
  CHECK_THROWS_AS(parse_netspec_text("Conv_1\n"), ParseError);                // no kind token
}

TEST_CASE("check_same_structure reports the first differing layer") {
  const NetworkSpec a = reference_backbone(0);
  NetworkSpec b = reference_backbone(0);
  std::get<ConvLayer>(b.layers[4].layer).out_channels += 1;
  std::get<ConvLayer>(b.layers[4].layer)
      .weights.resize(std::get<ConvLayer>(b.layers[4].layer).weights.size() + 9 * 16);
  std::get<ConvLayer>(b.layers[4].layer).bias.push_back(0.0f);
  try {
    check_same_structure(a, b);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(b.layers[4].name) != std::string::npos);
  }
}

TEST_CASE("model files round-trip backbone and head exactly") {
  testutil::TempDir dir("model_io");
  Model model;
  model.net = reference_backbone(17);
  model.head = seeded_head(256, 3, 1, 99);
  const std::string path = dir.file("net.tgw");
  save_model_file(path, model);
  const Model loaded = load_model_file(path);
  REQUIRE(loaded.head.has_value());
  CHECK(*loaded.head == *model.head);
  CHECK_NOTHROW(check_same_structure(model.net, loaded.net));
  REQUIRE(loaded.net.layers.size() == model.net.layers.size());
  for (std::size_t i = 0; i < model.net.layers.size(); ++i) {
    const auto* want = std::get_if<ConvLayer>(&model.net.layers[i].layer);
    const auto* got = std::get_if<ConvLayer>(&loaded.net.layers[i].layer);
    if (want != nullptr) {
      REQUIRE(got != nullptr);
      CHECK(got->weights == want->weights);
      CHECK(got->bias == want->bias);
    }
  }
}

TEST_CASE("model files survive a head-less save") {
  testutil::TempDir dir("model_io_nohead");
  Model model;
  model.net = reference_backbone(4);
  const std::string path = dir.file("net.tgw");
  save_model_file(path, model);
  const Model loaded = load_model_file(path);
  CHECK_FALSE(loaded.head.has_value());
  CHECK_NOTHROW(check_same_structure(model.net, loaded.net));
}

TEST_CASE("load_model rejects corrupt files") {
  testutil::TempDir dir("model_io_bad");
  Model model;
  model.net = reference_backbone(0);
  model.head = zero_head(256, 3);
  const std::string path = dir.file("net.tgw");
  save_model_file(path, model);
  const std::string good = testutil::read_file(path);

  SUBCASE("bad magic") {
    std::string bad = good;
    bad[0] = 'X';
    const std::string p = dir.file("bad_magic.tgw");
    testutil::write_file(p, bad);
    CHECK_THROWS_AS(load_model_file(p), ParseError);
  }
  SUBCASE("truncation at any of several prefixes") {
    for (const std::size_t len : {std::size_t{2}, std::size_t{7}, std::size_t{40},
                                  good.size() / 2, good.size() - 1}) {
      const std::string p = dir.file("trunc.tgw");
      testutil::write_file(p, good.substr(0, len));
      CHECK_THROWS_AS(load_model_file(p), ParseError);
    }
  }
  SUBCASE("truncation errors name the byte offset") {
    const std::string p = dir.file("trunc2.tgw");
    testutil::write_file(p, good.substr(0, 7));
    try {
      load_model_file(p);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("truncated at byte") != std::string::npos);
    }
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_model_file(dir.file("absent.tgw")), IoError);
  }
}
