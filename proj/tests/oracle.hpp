#pragma once

// Reference implementations used only by the tests. They take a different
// route from the library (n-vectors, explicit rotation matrices) so that
// agreement is evidence rather than repetition.

#include <array>
#include <cmath>
#include <numbers>

namespace oracle {

using Vec3 = std::array<double, 3>;

constexpr double kR = 6371000.0;
constexpr double kPi = std::numbers::pi;

inline double rad(double deg) { return deg * kPi / 180.0; }
inline double deg(double r) { return r * 180.0 / kPi; }

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline Vec3 nvec(double lat_deg, double lon_deg) {
    const double la = rad(lat_deg), lo = rad(lon_deg);
    return {std::cos(la) * std::cos(lo), std::cos(la) * std::sin(lo), std::sin(la)};
}

inline void latlon(const Vec3& n, double& lat_deg, double& lon_deg) {
    lat_deg = deg(std::atan2(n[2], std::hypot(n[0], n[1])));
    lon_deg = deg(std::atan2(n[1], n[0]));
}

inline Vec3 north_at(const Vec3& n) {
    const double lo = std::atan2(n[1], n[0]);
    const double la = std::atan2(n[2], std::hypot(n[0], n[1]));
    return {-std::sin(la) * std::cos(lo), -std::sin(la) * std::sin(lo), std::cos(la)};
}

inline Vec3 east_at(const Vec3& n) {
    const double lo = std::atan2(n[1], n[0]);
    return {-std::sin(lo), std::cos(lo), 0.0};
}

/// Initial bearing via the tangent-plane direction of the great circle.
inline double bearing(double lat1, double lon1, double lat2, double lon2) {
    const Vec3 a = nvec(lat1, lon1), b = nvec(lat2, lon2);
    const Vec3 c = cross(cross(a, b), a);  // tangent direction at a towards b
    return std::atan2(dot(c, east_at(a)), dot(c, north_at(a)));
}

inline double distance(double lat1, double lon1, double lat2, double lon2) {
    const Vec3 a = nvec(lat1, lon1), b = nvec(lat2, lon2);
    return kR * std::atan2(norm(cross(a, b)), dot(a, b));
}

inline void destination(double lat, double lon, double brg, double dist, double& lat2, double& lon2) {
    const Vec3 a = nvec(lat, lon);
    const Vec3 n = north_at(a), e = east_at(a);
    const double delta = dist / kR;
    Vec3 out{};
    for (int i = 0; i < 3; ++i) {
        out[i] = a[i] * std::cos(delta) + (n[i] * std::cos(brg) + e[i] * std::sin(brg)) * std::sin(delta);
    }
    latlon(out, lat2, lon2);
}

// Camera: world axes right / up / forward, camera at (0, h, 0). Camera-frame
// ray (u - cu, -(v - cv), f) rotated into the world about the right axis.
struct Cam {
    double cu, cv, f, pitch, h;

    Vec3 to_world(const Vec3& c) const {
        const double cp = std::cos(pitch), sp = std::sin(pitch);
        return {c[0], cp * c[1] + sp * c[2], -sp * c[1] + cp * c[2]};
    }
    Vec3 to_camera(const Vec3& w) const {
        const double cp = std::cos(pitch), sp = std::sin(pitch);
        return {w[0], cp * w[1] - sp * w[2], sp * w[1] + cp * w[2]};
    }

    /// Ground intersection of the pixel ray; returns false above the horizon.
    bool ground(double u, double v, Vec3& out) const {
        const Vec3 d = to_world({u - cu, -(v - cv), f});
        if (!(d[1] < 0.0)) return false;
        const double lambda = -h / d[1];
        out = {lambda * d[0], 0.0, lambda * d[2]};
        return true;
    }

    void project(const Vec3& w, double& u, double& v) const {
        const Vec3 c = to_camera({w[0], w[1] - h, w[2]});
        u = cu + f * c[0] / c[2];
        v = cv - f * c[1] / c[2];
    }
};

}  // namespace oracle
