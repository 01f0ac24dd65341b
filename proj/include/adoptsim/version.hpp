#pragma once

namespace adoptsim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace adoptsim
