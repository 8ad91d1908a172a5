#pragma once

#include <string_view>

namespace iolws {

inline constexpr std::string_view kToolVersion = "0.3.1";

} // namespace iolws
