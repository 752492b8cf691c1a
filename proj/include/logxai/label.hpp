#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace logxai {

enum class Label { normal = 0, anomaly = 1 };

inline constexpr std::string_view to_string(Label l) noexcept {
  return l == Label::anomaly ? "Anomaly" : "Normal";
}

inline std::optional<Label> label_from_string(std::string_view s) noexcept {
  if (s == "Anomaly" || s == "anomaly") return Label::anomaly;
  if (s == "Normal" || s == "normal") return Label::normal;
  return std::nullopt;
}

} // namespace logxai
