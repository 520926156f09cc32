#pragma once

namespace ssim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ssim
