#pragma once

namespace satcert {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

// Default seed for all randomized searches; overridable via SATCERT_SEED.
inline constexpr unsigned long long kDefaultSeed = 0x5a7c3a11u;

}  // namespace satcert
