#include "thermoguard/model_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "thermoguard/errors.hpp"

namespace thermoguard {

namespace {

constexpr char kMagic[4] = {'T', 'G', 'W', '1'};
constexpr std::uint8_t kKindConv = 1;
constexpr std::uint8_t kKindBn = 2;
constexpr std::uint8_t kKindRelu = 3;
constexpr std::uint8_t kKindPool = 4;

// Serialization is explicitly little-endian regardless of host order.
void put_u16(std::ostream& out, std::uint16_t v) {
  const char bytes[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  out.write(bytes, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 4);
}

void put_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

void put_name(std::ostream& out, const std::string& name) {
  if (name.size() > 0xffff) {
    throw IoError("layer name '" + name.substr(0, 32) + "...' exceeds 65535 bytes");
  }
  put_u16(out, static_cast<std::uint16_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint64_t offset() const { return offset_; }

  void bytes(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw ParseError("weights file truncated at byte " + std::to_string(offset_) +
                       " while reading " + what);
    }
    offset_ += n;
  }

  std::uint8_t u8(const char* what) {
    char b;
    bytes(&b, 1, what);
    return static_cast<std::uint8_t>(b);
  }

  std::uint16_t u16(const char* what) {
    char b[2];
    bytes(b, 2, what);
    return static_cast<std::uint16_t>(static_cast<unsigned char>(b[0]) |
                                      (static_cast<unsigned char>(b[1]) << 8));
  }

  std::uint32_t u32(const char* what) {
    char b[4];
    bytes(b, 4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }

  float f32(const char* what) {
    const std::uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  void f32_array(std::vector<float>& dst, std::size_t n, const char* what) {
    dst.resize(n);
    for (std::size_t i = 0; i < n; ++i) dst[i] = f32(what);
  }

 private:
  std::istream& in_;
  std::uint64_t offset_ = 0;
};

void write_conv_record(std::ostream& out, const std::string& name, int oc, int ic, int kh,
                       int kw, int stride, int padding, const std::vector<float>& weights,
                       const std::vector<float>& bias) {
  out.put(static_cast<char>(kKindConv));
  put_name(out, name);
  put_u32(out, static_cast<std::uint32_t>(oc));
  put_u32(out, static_cast<std::uint32_t>(ic));
  put_u32(out, static_cast<std::uint32_t>(kh));
  put_u32(out, static_cast<std::uint32_t>(kw));
  put_u32(out, static_cast<std::uint32_t>(stride));
  put_u32(out, static_cast<std::uint32_t>(padding));
  for (const float v : weights) put_f32(out, v);
  for (const float v : bias) put_f32(out, v);
}

}  // namespace

void save_model(std::ostream& out, const Model& model) {
  model.net.validate();
  out.write(kMagic, 4);
  const std::size_t count = model.net.layers.size() + (model.head ? 1 : 0);
  put_u32(out, static_cast<std::uint32_t>(count));

  for (const NamedLayer& entry : model.net.layers) {
    if (const auto* conv = std::get_if<ConvLayer>(&entry.layer)) {
      write_conv_record(out, entry.name, conv->out_channels, conv->in_channels,
                        ConvLayer::kKernel, ConvLayer::kKernel, conv->stride, conv->padding,
                        conv->weights, conv->bias);
    } else if (const auto* bn = std::get_if<BatchNormParams>(&entry.layer)) {
      out.put(static_cast<char>(kKindBn));
      put_name(out, entry.name);
      put_u32(out, static_cast<std::uint32_t>(bn->gamma.size()));
      for (const float v : bn->gamma) put_f32(out, v);
      for (const float v : bn->beta) put_f32(out, v);
      for (const float v : bn->running_mean) put_f32(out, v);
      for (const float v : bn->running_var) put_f32(out, v);
      put_f32(out, bn->epsilon);
    } else if (std::holds_alternative<ReluLayer>(entry.layer)) {
      out.put(static_cast<char>(kKindRelu));
      put_name(out, entry.name);
    } else {
      out.put(static_cast<char>(kKindPool));
      put_name(out, entry.name);
      put_u32(out, 2);
      put_u32(out, 2);
    }
  }

  if (model.head) {
    write_conv_record(out, "head", model.head->out_channels, model.head->in_channels, 1, 1, 1,
                      0, model.head->weights, model.head->bias);
  }
  if (!out) {
    throw IoError("failed writing model stream");
  }
}

void save_model_file(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  save_model(out, model);
}

Model load_model(std::istream& in) {
  Reader r(in);
  char magic[4];
  r.bytes(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError("bad magic at byte 0; not a TGW1 weights file");
  }
  const std::uint32_t count = r.u32("record count");

  Model model;
  for (std::uint32_t i = 0; i < count; ++i) {
    if (model.head) {
      throw ParseError("record after the detection head at byte " + std::to_string(r.offset()) +
                       "; the head must be the final record");
    }
    const std::uint64_t record_off = r.offset();
    const std::uint8_t kind = r.u8("record kind");
    const std::uint16_t name_len = r.u16("name length");
    std::string name(name_len, '\0');
    if (name_len > 0) r.bytes(name.data(), name_len, "layer name");

    switch (kind) {
      case kKindConv: {
        const std::uint32_t oc = r.u32("conv out_channels");
        const std::uint32_t ic = r.u32("conv in_channels");
        const std::uint32_t kh = r.u32("conv kernel height");
        const std::uint32_t kw = r.u32("conv kernel width");
        const std::uint32_t stride = r.u32("conv stride");
        const std::uint32_t padding = r.u32("conv padding");
        if (oc == 0 || ic == 0 || oc > (1u << 20) || ic > (1u << 20)) {
          throw ParseError("implausible conv channels at byte " + std::to_string(record_off));
        }
        if (kh == 3 && kw == 3) {
          ConvLayer conv;
          conv.out_channels = static_cast<int>(oc);
          conv.in_channels = static_cast<int>(ic);
          conv.stride = static_cast<int>(stride);
          conv.padding = static_cast<int>(padding);
          r.f32_array(conv.weights, static_cast<std::size_t>(oc) * ic * 9, "conv weights");
          r.f32_array(conv.bias, oc, "conv bias");
          model.net.layers.push_back({std::move(name), std::move(conv)});
        } else if (kh == 1 && kw == 1) {
          DetectionHead head;
          head.out_channels = static_cast<int>(oc);
          head.in_channels = static_cast<int>(ic);
          r.f32_array(head.weights, static_cast<std::size_t>(oc) * ic, "head weights");
          r.f32_array(head.bias, oc, "head bias");
          model.head = std::move(head);
        } else {
          throw ParseError("unsupported conv kernel " + std::to_string(kh) + "x" +
                           std::to_string(kw) + " at byte " + std::to_string(record_off));
        }
        break;
      }
      case kKindBn: {
        const std::uint32_t channels = r.u32("bn channels");
        if (channels == 0 || channels > (1u << 20)) {
          throw ParseError("implausible bn channel count at byte " + std::to_string(record_off));
        }
        BatchNormParams bn;
        r.f32_array(bn.gamma, channels, "bn gamma");
        r.f32_array(bn.beta, channels, "bn beta");
        r.f32_array(bn.running_mean, channels, "bn mean");
        r.f32_array(bn.running_var, channels, "bn variance");
        bn.epsilon = r.f32("bn epsilon");
        model.net.layers.push_back({std::move(name), std::move(bn)});
        break;
      }
      case kKindRelu:
        model.net.layers.push_back({std::move(name), ReluLayer{}});
        break;
      case kKindPool: {
        const std::uint32_t window = r.u32("pool window");
        const std::uint32_t stride = r.u32("pool stride");
        if (window != 2 || stride != 2) {
          throw ParseError("unsupported pool geometry at byte " + std::to_string(record_off) +
                           "; only 2x2 stride-2 pooling is defined");
        }
        model.net.layers.push_back({std::move(name), MaxPoolLayer{}});
        break;
      }
      default:
        throw ParseError("unknown record kind " + std::to_string(kind) + " at byte " +
                         std::to_string(record_off));
    }
  }

  resolve_feature_layer(model.net);
  model.net.validate();
  return model;
}

Model load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path + "' for reading");
  }
  try {
    return load_model(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace thermoguard
