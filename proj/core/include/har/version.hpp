#pragma once

namespace har {

inline constexpr const char* kVersion = "0.1.0";

// Bumped whenever a config or output file layout changes incompatibly.
inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kCheckpointSchemaVersion = 1;

}  // namespace har
