#pragma once

namespace toma {

inline constexpr const char* kToolVersion = "toma 0.1.0";

}  // namespace toma
