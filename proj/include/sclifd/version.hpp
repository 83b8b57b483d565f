#pragma once

namespace sclifd {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sclifd
