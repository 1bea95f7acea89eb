#pragma once

#include <cmath>
#include <numbers>

namespace geoloc {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg2rad(double deg) { return deg * (kPi / 180.0); }
constexpr double rad2deg(double rad) { return rad * (180.0 / kPi); }

/// Wraps an angle in radians into (-pi, pi].
inline double wrap_pi(double rad) {
    double r = std::remainder(rad, 2.0 * kPi);  // [-pi, pi]
    if (r <= -kPi) r += 2.0 * kPi;
    return r;
}

/// Wraps a longitude in degrees into (-180, 180].
inline double wrap_lon_deg(double lon) {
    double r = std::remainder(lon, 360.0);
    if (r <= -180.0) r += 360.0;
    return r;
}

}  // namespace geoloc
