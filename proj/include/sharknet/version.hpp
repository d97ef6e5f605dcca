#pragma once

namespace sharknet {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sharknet
