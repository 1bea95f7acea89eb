#pragma once

// Spherical-earth geodesic primitives. Angles are radians internally,
// GeoPoint stores degrees because it is the I/O unit.

#include <geoloc/angles.hpp>
#include <geoloc/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace geoloc {

struct GeoPoint {
    double lat = 0.0;  // degrees, [-90, 90]
    double lon = 0.0;  // degrees, (-180, 180]

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

struct EarthModel {
    double radius_m = 6371000.0;
};

struct DeviationVector {
    double longitudinal_m = 0.0;  // along the reference heading
    double lateral_m = 0.0;       // right of the reference heading
    double magnitude_m = 0.0;
};

inline GeoPoint make_geopoint(double lat_deg, double lon_deg) {
    if (!(lat_deg >= -90.0 && lat_deg <= 90.0) || !std::isfinite(lon_deg)) {
        throw Error(ErrorCode::InvalidArgument,
                    "latitude out of range: " + std::to_string(lat_deg));
    }
    return {lat_deg, wrap_lon_deg(lon_deg)};
}

namespace detail {

inline std::array<double, 3> unit_vector(const GeoPoint& p) {
    const double lat = deg2rad(p.lat);
    const double lon = deg2rad(p.lon);
    return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

inline double chord(const std::array<double, 3>& a, const std::array<double, 3>& b, double sign) {
    const double x = a[0] + sign * b[0];
    const double y = a[1] + sign * b[1];
    const double z = a[2] + sign * b[2];
    return std::sqrt(x * x + y * y + z * z);
}

// Segments shorter than this (or this close to antipodal) have no bearing.
inline constexpr double kDegenerateDeg = 1e-12;

}  // namespace detail

/// Initial great-circle bearing from `start` to `end`, clockwise from true
/// north, in (-pi, pi].
inline double bearing(const GeoPoint& start, const GeoPoint& end) {
    const auto a = detail::unit_vector(start);
    const auto b = detail::unit_vector(end);
    const double tol = deg2rad(detail::kDegenerateDeg);
    if (detail::chord(a, b, -1.0) <= tol) {
        throw Error(ErrorCode::DegenerateSegment, "bearing between coincident points");
    }
    if (detail::chord(a, b, +1.0) <= tol) {
        throw Error(ErrorCode::DegenerateSegment, "bearing between antipodal points");
    }
    const double phi1 = deg2rad(start.lat);
    const double phi2 = deg2rad(end.lat);
    const double dlambda = deg2rad(end.lon - start.lon);
    const double m = std::sin(dlambda) * std::cos(phi2);
    const double n = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlambda);
    return wrap_pi(std::atan2(m, n));
}

/// Point reached from `origin` after travelling `distance_m` along the
/// initial bearing `bearing_rad`.
inline GeoPoint destination(const GeoPoint& origin, double bearing_rad, double distance_m,
                            const EarthModel& earth = {}) {
    if (!(distance_m >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "negative destination distance");
    }
    if (distance_m == 0.0) return origin;
    const double l1 = deg2rad(origin.lat);
    const double delta = distance_m / earth.radius_m;
    const double s = std::sin(l1) * std::cos(delta) + std::cos(l1) * std::sin(delta) * std::cos(bearing_rad);
    const double l2 = std::asin(std::clamp(s, -1.0, 1.0));
    const double u = std::sin(bearing_rad) * std::sin(delta) * std::cos(l1);
    const double v = std::cos(delta) - std::sin(l1) * std::sin(l2);
    const double g2 = deg2rad(origin.lon) + std::atan2(u, v);
    return {rad2deg(l2), wrap_lon_deg(rad2deg(g2))};
}

/// Haversine distance in meters.
inline double great_circle_distance(const GeoPoint& a, const GeoPoint& b, const EarthModel& earth = {}) {
    const double phi1 = deg2rad(a.lat);
    const double phi2 = deg2rad(b.lat);
    const double sdphi = std::sin((phi2 - phi1) / 2.0);
    const double sdlam = std::sin(deg2rad(wrap_lon_deg(b.lon - a.lon)) / 2.0);
    const double h = sdphi * sdphi + std::cos(phi1) * std::cos(phi2) * sdlam * sdlam;
    return 2.0 * earth.radius_m * std::atan2(std::sqrt(h), std::sqrt(std::max(0.0, 1.0 - h)));
}

/// Splits the displacement truth -> estimate into components along and to
/// the right of `truth_heading_rad`. The displacement lives in the tangent
/// plane at `truth` (azimuthal equidistant), so the magnitude is exactly the
/// haversine distance.
inline DeviationVector decompose_deviation(const GeoPoint& truth, double truth_heading_rad,
                                           const GeoPoint& estimate, const EarthModel& earth = {}) {
    const double dist = great_circle_distance(truth, estimate, earth);
    if (dist > 1000.0) {
        throw Error(ErrorCode::OutOfLocalRange,
                    "deviation of " + std::to_string(dist) + " m exceeds the 1 km local range");
    }
    DeviationVector out;
    if (dist == 0.0) return out;
    double azimuth = 0.0;
    try {
        azimuth = bearing(truth, estimate);
    } catch (const Error&) {
        return out;  // sub-1e-12 degree separation
    }
    const double rel = azimuth - truth_heading_rad;
    out.longitudinal_m = dist * std::cos(rel);
    out.lateral_m = dist * std::sin(rel);
    out.magnitude_m = std::hypot(out.longitudinal_m, out.lateral_m);
    return out;
}

/// Local east/north displacement of `p` relative to `origin` using a
/// per-latitude equirectangular scale. Exact inverse of `offset_enu`.
struct EnuOffset {
    double east_m = 0.0;
    double north_m = 0.0;
};

inline EnuOffset to_enu(const GeoPoint& origin, const GeoPoint& p, const EarthModel& earth = {}) {
    return {earth.radius_m * deg2rad(wrap_lon_deg(p.lon - origin.lon)) * std::cos(deg2rad(p.lat)),
            earth.radius_m * deg2rad(p.lat - origin.lat)};
}

inline GeoPoint offset_enu(const GeoPoint& origin, double east_m, double north_m,
                           const EarthModel& earth = {}) {
    const double lat = origin.lat + rad2deg(north_m / earth.radius_m);
    const double lon = origin.lon + rad2deg(east_m / (earth.radius_m * std::cos(deg2rad(lat))));
    return {lat, wrap_lon_deg(lon)};
}

}  // namespace geoloc
