#pragma once

namespace symbranch {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace symbranch
