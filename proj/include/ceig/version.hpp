#pragma once

namespace ceig {

inline constexpr const char* version = "0.1.0";

}  // namespace ceig
