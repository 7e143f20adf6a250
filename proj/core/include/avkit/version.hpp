#pragma once

namespace avkit {

inline constexpr const char* kVersion = "0.1.0";

} // namespace avkit
