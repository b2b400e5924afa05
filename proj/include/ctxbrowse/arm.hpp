#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace ctxbrowse {

enum class ExperimentArm : std::uint8_t {
  A_baseline,
  B_similarity,
  C_session_context,
};

inline constexpr std::array<ExperimentArm, 3> kAllArms = {
    ExperimentArm::A_baseline, ExperimentArm::B_similarity,
    ExperimentArm::C_session_context};

/// Short log label: "A", "B" or "C".
std::string_view arm_label(ExperimentArm arm);
std::string_view arm_name(ExperimentArm arm);
/// Accepts the short label or the full name, case-insensitive.
std::optional<ExperimentArm> parse_arm(std::string_view text);

constexpr std::size_t arm_slot(ExperimentArm arm) {
  return static_cast<std::size_t>(arm);
}

}  // namespace ctxbrowse
