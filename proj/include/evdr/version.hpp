#pragma once

namespace evdr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace evdr
