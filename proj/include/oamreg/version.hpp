#pragma once

#include <string_view>

namespace oamreg {

inline constexpr std::string_view kVersion = "0.1.0";

}  // namespace oamreg
