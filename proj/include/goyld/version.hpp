#pragma once

namespace goyld {
inline constexpr const char* kToolVersion = "0.1.0";
}
