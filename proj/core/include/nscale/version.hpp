#pragma once

namespace nscale {

inline constexpr const char* version = "0.1.0";

}  // namespace nscale
