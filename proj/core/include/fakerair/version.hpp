#pragma once

namespace fakerair {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fakerair
