#pragma once

namespace paddist {
inline constexpr const char* kVersion = "paddist 0.1.0";
}
