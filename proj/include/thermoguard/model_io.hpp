#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "thermoguard/net.hpp"
#include "thermoguard/yolo.hpp"

namespace thermoguard {

struct Model {
  NetworkSpec net;
  std::optional<DetectionHead> head;  // absent for backbone-only files
};

// Binary little-endian container. Magic "TGW1", u32 record count, then per
// record: u8 kind (1=conv, 2=bn, 3=relu, 4=pool), u16 name length + name,
// a kind-specific u32 dimension header, and an f32 payload.
//   conv: dims out,in,kh,kw,stride,pad; payload weights then bias
//   bn:   dims channels; payload gamma, beta, mean, var, then f32 epsilon
//   relu: no dims, no payload
//   pool: dims window,stride (both 2)
// The detection head travels as a trailing conv record with kh = kw = 1.
void save_model(std::ostream& out, const Model& model);
void save_model_file(const std::string& path, const Model& model);
Model load_model(std::istream& in);
Model load_model_file(const std::string& path);

}  // namespace thermoguard
