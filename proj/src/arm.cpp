#include "ctxbrowse/arm.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace ctxbrowse {

std::string_view arm_label(ExperimentArm arm) {
  switch (arm) {
    case ExperimentArm::A_baseline: return "A";
    case ExperimentArm::B_similarity: return "B";
    case ExperimentArm::C_session_context: return "C";
  }
  return "?";
}

std::string_view arm_name(ExperimentArm arm) {
  switch (arm) {
    case ExperimentArm::A_baseline: return "A_baseline";
    case ExperimentArm::B_similarity: return "B_similarity";
    case ExperimentArm::C_session_context: return "C_session_context";
  }
  return "unknown";
}

std::optional<ExperimentArm> parse_arm(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  for (const auto arm : kAllArms) {
    std::string label(arm_label(arm));
    std::string name(arm_name(arm));
    std::transform(label.begin(), label.end(), label.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (lower == label || lower == name) return arm;
  }
  return std::nullopt;
}

}  // namespace ctxbrowse
