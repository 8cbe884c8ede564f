#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace dafc {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Fractional part of cycles * k, wrapped to [-0.5, 0.5).
///
/// The product is split into its rounded value and exact rounding error, so
/// the result stays accurate to a few ulp of the fraction for every |k| < 2^53
/// instead of degrading linearly with k.
inline double phase_cycles(double cycles, std::int64_t k) noexcept {
    const double kd = static_cast<double>(k);
    const double p = cycles * kd;
    const double err = std::fma(cycles, kd, -p);
    double f = (p - std::floor(p)) + err;
    f -= std::floor(f + 0.5);
    return f;
}

/// Angle in radians of cycles * k, reduced to [-pi, pi).
inline double phase_radians(double cycles, std::int64_t k) noexcept {
    return kTwoPi * phase_cycles(cycles, k);
}

} // namespace dafc
