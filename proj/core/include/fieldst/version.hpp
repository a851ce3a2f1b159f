#pragma once

namespace fieldst {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fieldst
