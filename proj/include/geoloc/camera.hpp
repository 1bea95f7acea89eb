#pragma once

// Pinhole camera with pitch-only extrinsics.
//
// Frames:
//   pixel  (u, v): u rightward, v downward, continuous.
//   camera (y1, y2, y3): y1 right, y2 up, y3 along the optical axis.
//   world  (w1, w2, w3): origin on the road directly under the camera,
//          w1 right, w2 up, w3 forward along the vehicle heading.
//
// The camera sits at (0, h, 0). A positive pitch tilts the optical axis up,
// which puts the horizon (and the vanishing point of forward road lines)
// below the principal point at v = h2 + f * tan(pitch).

#include <geoloc/angles.hpp>
#include <geoloc/error.hpp>

#include <cmath>
#include <optional>
#include <string>

namespace geoloc {

struct PixelPoint {
    double u = 0.0;
    double v = 0.0;

    friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

struct CameraIntrinsics {
    int n_h = 0;
    int n_v = 0;
    double fov_h = 0.0;  // radians
    double f = 0.0;      // pixels
    PixelPoint principal;
    double gamma = 0.0;  // radians per pixel

    bool contains(const PixelPoint& p) const {
        return p.u >= 0.0 && p.u <= n_h && p.v >= 0.0 && p.v <= n_v;
    }
};

struct CameraExtrinsics {
    double pitch_rad = 0.0;
    double height_m = 1.4;
};

/// A point on the road plane; w2 is always zero.
struct GroundPoint {
    double w1 = 0.0;
    double w2 = 0.0;
    double w3 = 0.0;
};

struct CameraRay {
    double y1 = 0.0;
    double y2 = 0.0;
    double y3 = 0.0;
};

inline CameraIntrinsics intrinsics_from_fov(int n_h, int n_v, double fov_h_rad,
                                            std::optional<PixelPoint> principal = std::nullopt) {
    if (n_h <= 0 || n_v <= 0) {
        throw Error(ErrorCode::InvalidArgument, "image resolution must be positive");
    }
    if (!(fov_h_rad > 0.0 && fov_h_rad < kPi)) {
        throw Error(ErrorCode::InvalidFov, "horizontal FOV must lie in (0, 180) degrees, got " +
                                               std::to_string(rad2deg(fov_h_rad)));
    }
    CameraIntrinsics k;
    k.n_h = n_h;
    k.n_v = n_v;
    k.fov_h = fov_h_rad;
    k.f = n_h / (2.0 * std::tan(fov_h_rad / 2.0));
    k.gamma = fov_h_rad / n_h;
    k.principal = principal.value_or(PixelPoint{n_h / 2.0, n_v / 2.0});
    return k;
}

inline CameraRay pixel_to_camera_ray(const PixelPoint& p, const CameraIntrinsics& k) {
    return {p.u - k.principal.u, -(p.v - k.principal.v), k.f};
}

/// Inverse of pixel_to_camera_ray for any ray with positive depth.
inline PixelPoint camera_ray_to_pixel(const CameraRay& ray, const CameraIntrinsics& k) {
    const double s = k.f / ray.y3;
    return {k.principal.u + ray.y1 * s, k.principal.v - ray.y2 * s};
}

/// Camera-frame coordinates of a world point (w2 may be non-zero).
inline CameraRay world_to_camera(double w1, double w2, double w3, const CameraExtrinsics& ext) {
    const double c = std::cos(ext.pitch_rad);
    const double s = std::sin(ext.pitch_rad);
    const double dy = w2 - ext.height_m;
    return {w1, c * dy - s * w3, s * dy + c * w3};
}

/// Projects an arbitrary world point. Throws BehindCamera for non-positive depth.
inline PixelPoint project_world_point(double w1, double w2, double w3, const CameraExtrinsics& ext,
                                      const CameraIntrinsics& k) {
    const CameraRay ray = world_to_camera(w1, w2, w3, ext);
    if (!(ray.y3 > 0.0)) {
        throw Error(ErrorCode::BehindCamera, "point has non-positive camera depth");
    }
    return camera_ray_to_pixel(ray, k);
}

/// Projects a road-plane point to continuous pixel coordinates. The result
/// may lie outside the frame; check with CameraIntrinsics::contains.
inline PixelPoint project_ground_point(const GroundPoint& w, const CameraExtrinsics& ext,
                                       const CameraIntrinsics& k) {
    return project_world_point(w.w1, 0.0, w.w3, ext, k);
}

}  // namespace geoloc
