#pragma once

namespace miae {

inline constexpr const char* kToolVersion = "0.1.0";

} // namespace miae
