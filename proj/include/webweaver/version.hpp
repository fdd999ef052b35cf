#pragma once

namespace webweaver {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace webweaver
