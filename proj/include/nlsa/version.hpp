#pragma once

namespace nlsa {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace nlsa
