#pragma once

namespace hoikit {

inline constexpr const char* kToolkitVersion = "0.1.0";

// Bumped when the corresponding on-disk schema changes incompatibly.
inline constexpr int kHandAssetFormatVersion = 1;
inline constexpr int kObjectAssetFormatVersion = 1;
inline constexpr int kMarkerFormatVersion = 1;
inline constexpr int kFieldFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;

}  // namespace hoikit
