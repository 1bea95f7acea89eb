#pragma once

// Back-projection of an anchor pixel through the pitched camera onto the
// road plane.

#include <geoloc/camera.hpp>
#include <geoloc/error.hpp>
#include <geoloc/ranging.hpp>

#include <cmath>

namespace geoloc {

inline constexpr double kHorizonTolerance = 1e-12;
inline constexpr double kSameLaneLateralM = 0.05;

/// Intersects the viewing ray through `p` with the road plane.
///
/// The ray is C + xi * R(-pitch) * (p1 - h1, -(p2 - h2), f) with C = (0, h, 0).
/// Pixels on or above the horizon never reach the road and raise HorizonRay.
inline GroundPoint back_project(const PixelPoint& p, const CameraExtrinsics& ext, const CameraIntrinsics& k) {
    const CameraRay ray = pixel_to_camera_ray(p, k);
    const double c = std::cos(-ext.pitch_rad);
    const double s = std::sin(-ext.pitch_rad);
    const double down = c * ray.y2 - s * ray.y3;  // world-vertical component of the ray
    if (!(down < -kHorizonTolerance)) {
        throw Error(ErrorCode::HorizonRay, "pixel at or above the horizon (v=" + std::to_string(p.v) + ")");
    }
    const double xi = -ext.height_m / down;
    GroundPoint w;
    w.w1 = xi * ray.y1;
    w.w3 = xi * (s * ray.y2 + c * ray.y3);
    return w;
}

/// Planar distance from the camera foot and the signed angle off the
/// forward axis (positive to the right).
inline RangeMeasurement range_and_angle(const GroundPoint& w) {
    RangeMeasurement m;
    m.d_m = std::hypot(w.w1, w.w3);
    m.theta_rad = std::copysign(std::atan(std::abs(w.w1) / w.w3), w.w1);
    if (std::abs(w.w1) < kSameLaneLateralM) {
        m.side = Side::Same;
    } else {
        m.side = w.w1 < 0.0 ? Side::Left : Side::Right;
    }
    return m;
}

}  // namespace geoloc
