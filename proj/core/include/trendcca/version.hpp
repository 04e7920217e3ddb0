#pragma once

namespace trendcca {

inline constexpr const char* kVersion = "0.1.0";

// Bumped whenever the JSON layout of reports or critical-value tables
// changes incompatibly.
inline constexpr int kReportSchemaVersion = 1;
inline constexpr int kTableFormatVersion = 1;

}  // namespace trendcca
