#pragma once

// Size-ratio ranging and pixel-angle bearing offsets from a bounding box.

#include <geoloc/camera.hpp>
#include <geoloc/error.hpp>

#include <cmath>
#include <map>
#include <string>

namespace geoloc {

enum class Side { Left, Same, Right };

constexpr const char* to_string(Side s) {
    switch (s) {
        case Side::Left: return "left";
        case Side::Same: return "same";
        case Side::Right: return "right";
    }
    return "same";
}

struct BoundingBox {
    double u_min = 0.0;
    double v_min = 0.0;
    double u_max = 0.0;
    double v_max = 0.0;

    double width() const { return u_max - u_min; }
    double height() const { return v_max - v_min; }
};

struct Detection {
    BoundingBox bbox;
    std::string class_label;

    /// Bottom-center of the box; assumed to touch the road.
    PixelPoint anchor() const { return {(bbox.u_min + bbox.u_max) / 2.0, bbox.v_max}; }
};

struct VehicleDims {
    double width_m = 0.0;
    double height_m = 0.0;
};

using DimsTable = std::map<std::string, VehicleDims, std::less<>>;

inline DimsTable default_dims_table() {
    return {{"car", {1.8, 1.5}}, {"van", {2.0, 2.2}}, {"truck", {2.5, 3.2}}};
}

/// Blend of the height-based and width-based size-ratio distances.
struct RangingWeights {
    double height = 0.85;
    double width = 0.15;
};

struct RangeMeasurement {
    double d_m = 0.0;
    double theta_rad = 0.0;  // negative = left of the optical axis
    Side side = Side::Same;
};

inline constexpr double kMinBoxPx = 2.0;

inline const VehicleDims& lookup_dims(const DimsTable& dims, const std::string& label) {
    const auto it = dims.find(label);
    if (it == dims.end()) {
        throw Error(ErrorCode::UnknownClass, "no dimensions for class '" + label + "'");
    }
    return it->second;
}

inline double distance_from_bbox(const Detection& det, const VehicleDims& dims, const CameraIntrinsics& k,
                                  const RangingWeights& weights = {}) {
    const double w_px = det.bbox.width();
    const double h_px = det.bbox.height();
    if (!(w_px >= kMinBoxPx) || !(h_px >= kMinBoxPx)) {
        throw Error(ErrorCode::DegenerateBox, "bounding box smaller than 2 px (" + std::to_string(w_px) +
                                                  " x " + std::to_string(h_px) + ")");
    }
    const double d_w = k.f * dims.width_m / w_px;
    const double d_h = k.f * dims.height_m / h_px;
    return weights.height * d_h + weights.width * d_w;
}

inline double distance_from_bbox(const Detection& det, const DimsTable& dims, const CameraIntrinsics& k,
                                 const RangingWeights& weights = {}) {
    return distance_from_bbox(det, lookup_dims(dims, det.class_label), k, weights);
}

/// Angle between the optical axis and the anchor, linear in the horizontal
/// pixel offset (gamma radians per pixel).
inline double theta_from_pixels(const Detection& det, const CameraIntrinsics& k) {
    return (det.anchor().u - k.principal.u) * k.gamma;
}

inline Side side_from_pixels(const Detection& det, const CameraIntrinsics& k) {
    const double t = det.anchor().u - k.principal.u;
    if (std::abs(t) < 1.0) return Side::Same;
    return t < 0.0 ? Side::Left : Side::Right;
}

inline RangeMeasurement measure_by_size(const Detection& det, const DimsTable& dims, const CameraIntrinsics& k,
                                        const RangingWeights& weights = {}) {
    return {distance_from_bbox(det, dims, k, weights), theta_from_pixels(det, k), side_from_pixels(det, k)};
}

}  // namespace geoloc
