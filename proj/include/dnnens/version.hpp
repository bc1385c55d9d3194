#pragma once

namespace dnnens {
inline constexpr const char* kVersion = "0.1.0";
}
