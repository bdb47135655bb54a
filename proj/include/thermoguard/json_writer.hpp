#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace thermoguard::jsonw {

// Fixed 6-decimal reals keep report files byte-stable across runs and platforms.
inline std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

inline std::string escape(const std::string& raw) {
  std::string out;
  out.reserve(raw.size() + 2);
  out += '"';
  for (const char c : raw) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", static_cast<unsigned char>(c));
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
  return out;
}

// Streaming writer; the comma stack tracks whether the current scope has emitted
// a member yet.
class Writer {
 public:
  void begin_object() { open('{'); }
  void end_object() { close('}'); }
  void begin_array() { open('['); }
  void end_array() { close(']'); }

  void key(const std::string& name) {
    comma();
    out_ += escape(name);
    out_ += ':';
    pending_value_ = true;
  }

  void value(double v) { raw(number(v)); }
  void value(int v) { raw(std::to_string(v)); }
  void value(std::int64_t v) { raw(std::to_string(v)); }
  void value(std::size_t v) { raw(std::to_string(v)); }
  void value(bool v) { raw(v ? "true" : "false"); }
  void value(const std::string& v) { raw(escape(v)); }
  void value(const char* v) { raw(escape(v)); }
  void null() { raw("null"); }

  const std::string& str() const { return out_; }

 private:
  void open(char c) {
    comma();
    out_ += c;
    need_comma_.push_back(false);
  }
  void close(char c) {
    need_comma_.pop_back();
    out_ += c;
    if (!need_comma_.empty()) need_comma_.back() = true;
  }
  void raw(const std::string& text) {
    comma();
    out_ += text;
    if (!need_comma_.empty()) need_comma_.back() = true;
  }
  void comma() {
    if (pending_value_) {
      pending_value_ = false;
      return;
    }
    if (!need_comma_.empty() && need_comma_.back()) out_ += ',';
    if (!need_comma_.empty()) need_comma_.back() = true;
  }

  std::string out_;
  std::vector<bool> need_comma_;
  bool pending_value_ = false;
};

}  // namespace thermoguard::jsonw
