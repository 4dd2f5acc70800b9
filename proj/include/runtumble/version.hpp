#pragma once

namespace runtumble {

inline constexpr const char* kVersion = "1.0.0";

}
