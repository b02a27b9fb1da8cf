#pragma once

namespace quenchlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace quenchlab
