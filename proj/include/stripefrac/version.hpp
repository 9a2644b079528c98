#pragma once

#include <string_view>

namespace stripefrac {

inline constexpr std::string_view kToolName = "stripefrac";
inline constexpr std::string_view kToolVersion = "0.1.0";

}  // namespace stripefrac
