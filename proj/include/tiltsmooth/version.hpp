#pragma once

namespace tiltsmooth {
inline constexpr const char* version = "0.3.0";
}
