// version.hpp: toolkit version string.

#pragma once

namespace jumpfb {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace jumpfb
