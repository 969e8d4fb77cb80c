#pragma once

#include <array>
#include <optional>
#include <string>

#include "tabla/error.hpp"

namespace tabla {

// The four stroke categories, in canonical order. Ties in classifier
// votes are broken by this order.
enum class Stroke : int { D = 0, RT = 1, RB = 2, B = 3 };

inline constexpr int kNumClasses = 4;

inline const std::array<std::string, 4>& stroke_names() {
  static const std::array<std::string, 4> names = {"D", "RT", "RB", "B"};
  return names;
}

inline const std::string& to_string(Stroke s) {
  return stroke_names()[static_cast<int>(s)];
}

inline std::optional<Stroke> parse_stroke(const std::string& s) {
  for (int i = 0; i < kNumClasses; ++i)
    if (stroke_names()[i] == s) return static_cast<Stroke>(i);
  return std::nullopt;
}

inline Stroke parse_stroke_or_throw(const std::string& s) {
  auto v = parse_stroke(s);
  if (!v) throw Error("unknown stroke label '" + s + "' (expected D, RT, RB or B)");
  return *v;
}

}  // namespace tabla
