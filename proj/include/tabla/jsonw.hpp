#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tabla/fsutil.hpp"

namespace tabla {

// Minimal streaming JSON writer. Keys keep insertion order and doubles
// are emitted with 17 significant digits so any double round-trips
// exactly; output is byte-stable across runs.
class JsonWriter {
public:
  std::string str() const { return out_; }

  void begin_object() { element(); out_ += '{'; stack_.push_back(State::Object); }
  void end_object() { out_ += '}'; stack_.pop_back(); }
  void begin_array() { element(); out_ += '['; stack_.push_back(State::Array); }
  void end_array() { out_ += ']'; stack_.pop_back(); }

  void key(const std::string& k) {
    element();
    string_raw(k);
    out_ += ':';
    pending_key_ = true;
  }

  void value(const std::string& s) { element(); string_raw(s); }
  void value(const char* s) { value(std::string(s)); }
  void value(double v) {
    element();
    if (std::isfinite(v)) {
      out_ += strprintf("%.17g", v);
    } else {
      string_raw(std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf"));
    }
  }
  void value(int v) { element(); out_ += std::to_string(v); }
  void value(long v) { element(); out_ += std::to_string(v); }
  void value(std::size_t v) { element(); out_ += std::to_string(v); }
  void value(bool v) { element(); out_ += v ? "true" : "false"; }
  void null() { element(); out_ += "null"; }

private:
  enum class State { Object, Array };

  void element() {
    if (pending_key_) {
      pending_key_ = false;
      return;
    }
    if (!stack_.empty() && out_.back() != '{' && out_.back() != '[') out_ += ',';
  }

  void string_raw(const std::string& s) {
    out_ += '"';
    for (char c : s) {
      switch (c) {
        case '"': out_ += "\\\""; break;
        case '\\': out_ += "\\\\"; break;
        case '\n': out_ += "\\n"; break;
        case '\t': out_ += "\\t"; break;
        case '\r': out_ += "\\r"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20)
            out_ += strprintf("\\u%04x", c);
          else
            out_ += c;
      }
    }
    out_ += '"';
  }

  std::string out_;
  std::vector<State> stack_;
  bool pending_key_ = false;
};

}  // namespace tabla
