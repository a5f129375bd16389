#pragma once

namespace subtok {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace subtok
