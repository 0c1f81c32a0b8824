#pragma once

namespace phonolib {

inline constexpr const char* version = "0.1.0";

}  // namespace phonolib
