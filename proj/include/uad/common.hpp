#pragma once

#include <algorithm>

namespace uad {

// Generator outputs are clamped into [kOutputClamp, 1 - kOutputClamp] before
// quantization so the top and bottom bins never degenerate to exact 0/1.
inline constexpr double kOutputClamp = 1e-12;

inline double clamp_unit(double y) {
    return std::clamp(y, kOutputClamp, 1.0 - kOutputClamp);
}

}  // namespace uad
