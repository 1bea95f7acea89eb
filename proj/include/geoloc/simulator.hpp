#pragma once

// Synthetic straight-road scenes. Actors move along a road through a local
// east/north frame; the scene is converted to lat/lon only at the record
// boundary. Targets are fronto-parallel rectangles standing on their ground
// point, so size-ratio ranging is exact on noise-free boxes.

#include <geoloc/camera.hpp>
#include <geoloc/error.hpp>
#include <geoloc/geodesy.hpp>
#include <geoloc/image.hpp>
#include <geoloc/pipeline.hpp>
#include <geoloc/ranging.hpp>
#include <geoloc/vision.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace geoloc {

/// Piecewise-linear speed over time, constant beyond the first/last knot.
struct SpeedProfile {
    std::vector<std::pair<double, double>> knots;  // (t seconds, speed m/s)

    static SpeedProfile constant(double mps) { return {{{0.0, mps}}}; }

    double speed(double t) const {
        if (knots.empty()) return 0.0;
        if (t <= knots.front().first) return knots.front().second;
        if (t >= knots.back().first) return knots.back().second;
        for (std::size_t i = 1; i < knots.size(); ++i) {
            if (t <= knots[i].first) {
                const auto [t0, v0] = knots[i - 1];
                const auto [t1, v1] = knots[i];
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
            }
        }
        return knots.back().second;
    }

    /// Distance covered between t = 0 and `t`.
    double distance(double t) const {
        if (knots.empty() || t <= 0.0) return 0.0;
        std::vector<double> cuts{0.0};
        for (const auto& [kt, kv] : knots) {
            if (kt > 0.0 && kt < t) cuts.push_back(kt);
        }
        cuts.push_back(t);
        double s = 0.0;
        for (std::size_t i = 1; i < cuts.size(); ++i) {
            s += 0.5 * (speed(cuts[i - 1]) + speed(cuts[i])) * (cuts[i] - cuts[i - 1]);
        }
        return s;
    }
};

struct ActorSpec {
    std::string id;
    std::string class_label = "car";
    VehicleDims dims{1.8, 1.5};
    double start_s_m = 0.0;   // along-road position at t = 0
    double lateral_m = 0.0;   // right of the road reference line
    SpeedProfile speed;
    bool opposite = false;    // drives against the road direction
};

struct NoiseSpec {
    double gps_sigma_m = 0.0;     // RMS of the 2-D ego displacement
    double pixel_jitter_px = 0.0; // uniform bound on each box edge
    bool quantize = false;
};

struct Scenario {
    std::string name = "scenario";
    GeoPoint origin{30.6600, 104.0600};
    double road_heading_rad = 0.0;
    double duration_s = 60.0;
    double fps = 1.0;
    ActorSpec ego;
    std::vector<ActorSpec> targets;
    std::vector<double> lane_lines_m{-1.75, 1.75, 5.25};
    CameraIntrinsics camera = intrinsics_from_fov(960, 720, deg2rad(86.7));
    CameraExtrinsics extrinsics{0.0, 1.4};
    double max_range_m = 45.0;
    double lane_near_m = 3.0;
    double lane_far_m = 60.0;
    NoiseSpec noise;
    bool emit_segments = true;
    bool render_images = false;
    double lane_stroke_px = 6.0;
    std::uint64_t seed = 42;
};

struct TruthSample {
    double t = 0.0;
    std::string target_id;
    GeoPoint position;
    double d_m = 0.0;
    double theta_rad = 0.0;
    double alpha_rad = 0.0;
    double speed_mps = 0.0;
    bool visible = false;
};

struct SyntheticTruth {
    std::vector<TruthSample> targets;     // every target at every frame time
    std::vector<TimedPoint> ego;          // noise-free ego positions
    CameraExtrinsics extrinsics;
};

struct GeneratedScene {
    std::vector<FrameRecord> frames;
    SyntheticTruth truth;
    std::vector<std::pair<std::string, GrayImage>> images;  // (image_ref, image)
};

namespace detail {

struct RoadFrame {
    double fe, fn;  // forward unit vector in east/north
    double re, rn;  // right unit vector
    explicit RoadFrame(double heading) :
        fe(std::sin(heading)), fn(std::cos(heading)), re(std::cos(heading)), rn(-std::sin(heading)) {}
};

inline double along_road(const ActorSpec& a, double t) {
    const double s = a.speed.distance(t);
    return a.opposite ? a.start_s_m - s : a.start_s_m + s;
}

inline GeoPoint actor_position(const Scenario& sc, const RoadFrame& rf, const ActorSpec& a, double t) {
    const double s = along_road(a, t);
    return offset_enu(sc.origin, s * rf.fe + a.lateral_m * rf.re, s * rf.fn + a.lateral_m * rf.rn);
}

// Liang-Barsky clip of a segment to [0, w] x [0, h].
inline bool clip_to_frame(LineSegment& s, double w, double h) {
    double t0 = 0.0, t1 = 1.0;
    const double du = s.b.u - s.a.u;
    const double dv = s.b.v - s.a.v;
    const double p[4] = {-du, du, -dv, dv};
    const double q[4] = {s.a.u, w - s.a.u, s.a.v, h - s.a.v};
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
            if (q[i] < 0.0) return false;
            continue;
        }
        const double r = q[i] / p[i];
        if (p[i] < 0.0) t0 = std::max(t0, r);
        else t1 = std::min(t1, r);
        if (t0 > t1) return false;
    }
    const PixelPoint a = s.a;
    s.a = {a.u + t0 * du, a.v + t0 * dv};
    s.b = {a.u + t1 * du, a.v + t1 * dv};
    return true;
}

}  // namespace detail

inline void validate(const Scenario& sc) {
    const auto bad = [](const std::string& why) { throw Error(ErrorCode::InvalidScenario, why); };
    if (!(sc.fps > 0.0)) bad("fps must be positive");
    if (!(sc.duration_s > 0.0)) bad("duration must be positive");
    if (!(sc.origin.lat > -89.0 && sc.origin.lat < 89.0)) bad("origin latitude must stay away from the poles");
    if (!(sc.extrinsics.height_m > 0.0)) bad("camera height must be positive");
    if (!(std::abs(sc.extrinsics.pitch_rad) < kPi / 4.0)) bad("pitch must be within +-45 degrees");
    if (sc.camera.n_h <= 0 || sc.camera.n_v <= 0 || !(sc.camera.f > 0.0)) bad("invalid camera");
    if (!(sc.max_range_m > 0.0)) bad("max range must be positive");
    if (sc.noise.gps_sigma_m < 0.0 || sc.noise.pixel_jitter_px < 0.0) bad("noise parameters must be non-negative");
    const auto check_actor = [&](const ActorSpec& a) {
        if (a.speed.knots.empty()) bad("actor '" + a.id + "' has no speed profile");
        for (std::size_t i = 0; i < a.speed.knots.size(); ++i) {
            if (a.speed.knots[i].second < 0.0) bad("actor '" + a.id + "' has a negative speed");
            if (i > 0 && !(a.speed.knots[i].first > a.speed.knots[i - 1].first)) bad("speed knots must increase in time");
        }
    };
    check_actor(sc.ego);
    for (const auto& t : sc.targets) {
        check_actor(t);
        if (t.id.empty()) bad("target without id");
        if (!(t.dims.width_m > 0.0 && t.dims.height_m > 0.0)) bad("target '" + t.id + "' needs positive dims");
    }
}

/// Box of a fronto-parallel `dims` rectangle whose bottom-center sits on
/// ground point `w`. Throws BehindCamera when the point is behind the camera.
inline BoundingBox synthesize_box(const GroundPoint& w, const VehicleDims& dims, const CameraExtrinsics& ext,
                                  const CameraIntrinsics& k) {
    const CameraRay c = world_to_camera(w.w1, 0.0, w.w3, ext);
    if (!(c.y3 > 0.0)) throw Error(ErrorCode::BehindCamera, "target behind camera");
    const double s = k.f / c.y3;
    BoundingBox b;
    b.u_min = k.principal.u + (c.y1 - dims.width_m / 2.0) * s;
    b.u_max = k.principal.u + (c.y1 + dims.width_m / 2.0) * s;
    b.v_max = k.principal.v - c.y2 * s;
    b.v_min = k.principal.v - (c.y2 + dims.height_m) * s;
    return b;
}

/// Lane boundaries at the given lateral offsets (relative to the camera),
/// projected and clipped to the frame.
inline std::vector<LineSegment> project_lane_lines(const std::vector<double>& lateral_m, double near_m, double far_m,
                                                   const CameraExtrinsics& ext, const CameraIntrinsics& k) {
    std::vector<LineSegment> out;
    for (double x : lateral_m) {
        try {
            LineSegment s{project_ground_point({x, 0.0, near_m}, ext, k), project_ground_point({x, 0.0, far_m}, ext, k)};
            if (!detail::clip_to_frame(s, k.n_h, k.n_v)) continue;
            if (s.length() < 10.0) continue;
            out.push_back(s);
        } catch (const Error&) {
            continue;
        }
    }
    return out;
}

/// Draws bright strokes of `stroke_px` width for each segment on a dark road.
inline GrayImage render_lane_image(const std::vector<LineSegment>& lanes, int width, int height, double stroke_px,
                                   std::uint8_t background = 60, std::uint8_t paint = 230) {
    GrayImage img(width, height, background);
    const double r = stroke_px / 2.0;
    for (const auto& s : lanes) {
        const double du = s.b.u - s.a.u;
        const double dv = s.b.v - s.a.v;
        const double len2 = du * du + dv * dv;
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min(s.a.u, s.b.u) - r)));
        const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max(s.a.u, s.b.u) + r)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min(s.a.v, s.b.v) - r)));
        const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max(s.a.v, s.b.v) + r)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double px = x + 0.5 - s.a.u;
                const double py = y + 0.5 - s.a.v;
                const double t = std::clamp((px * du + py * dv) / len2, 0.0, 1.0);
                if (std::hypot(px - t * du, py - t * dv) <= r) img.at(x, y) = paint;
            }
        }
    }
    return img;
}

/// Perturbs ego GPS with isotropic Gaussian noise (2-D RMS `gps_sigma_m`)
/// and every box edge with uniform noise in [-jitter, +jitter].
inline std::vector<FrameRecord> inject_noise(std::vector<FrameRecord> records, double gps_sigma_m,
                                             double pixel_jitter_px, std::uint64_t seed, const EarthModel& earth = {}) {
    if (gps_sigma_m < 0.0 || pixel_jitter_px < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "noise parameters must be non-negative");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double axis_sigma = gps_sigma_m / std::sqrt(2.0);
    for (auto& r : records) {
        const double de = gauss(rng);
        const double dn = gauss(rng);
        if (gps_sigma_m > 0.0) r.ego = offset_enu(r.ego, axis_sigma * de, axis_sigma * dn, earth);
        for (auto& td : r.detections) {
            std::array<double, 4> j{};
            for (double& v : j) v = unit(rng);
            if (pixel_jitter_px > 0.0) {
                td.det.bbox.u_min += pixel_jitter_px * j[0];
                td.det.bbox.v_min += pixel_jitter_px * j[1];
                td.det.bbox.u_max += pixel_jitter_px * j[2];
                td.det.bbox.v_max += pixel_jitter_px * j[3];
            }
        }
    }
    return records;
}

inline GeneratedScene generate(const Scenario& sc) {
    validate(sc);
    const detail::RoadFrame rf(sc.road_heading_rad);
    const CameraIntrinsics& k = sc.camera;
    GeneratedScene out;
    out.truth.extrinsics = sc.extrinsics;

    const int n_frames = static_cast<int>(std::floor(sc.duration_s * sc.fps + 1e-9)) + 1;
    for (int i = 0; i < n_frames; ++i) {
        const double t = i / sc.fps;
        FrameRecord fr;
        fr.t = t;
        fr.ego = detail::actor_position(sc, rf, sc.ego, t);
        out.truth.ego.push_back({t, fr.ego});
        const double s_ego = detail::along_road(sc.ego, t);

        for (const auto& tgt : sc.targets) {
            TruthSample ts;
            ts.t = t;
            ts.target_id = tgt.id;
            ts.position = detail::actor_position(sc, rf, tgt, t);
            ts.speed_mps = tgt.speed.speed(t);
            const GroundPoint w{tgt.lateral_m - sc.ego.lateral_m, 0.0, detail::along_road(tgt, t) - s_ego};
            ts.d_m = std::hypot(w.w1, w.w3);
            ts.theta_rad = std::atan2(w.w1, w.w3);
            ts.alpha_rad = wrap_pi(sc.road_heading_rad + ts.theta_rad);
            if (w.w3 > 0.0 && ts.d_m <= sc.max_range_m) {
                try {
                    const BoundingBox box = synthesize_box(w, tgt.dims, sc.extrinsics, k);
                    if (box.u_min >= 0.0 && box.v_min >= 0.0 && box.u_max <= k.n_h && box.v_max <= k.n_v) {
                        fr.detections.push_back({tgt.id, Detection{box, tgt.class_label}});
                        ts.visible = true;
                    }
                } catch (const Error&) {
                    // behind the camera: not observed
                }
            }
            out.truth.targets.push_back(ts);
        }

        std::vector<double> lanes;
        for (double x : sc.lane_lines_m) lanes.push_back(x - sc.ego.lateral_m);
        const auto segs = project_lane_lines(lanes, sc.lane_near_m, sc.lane_far_m, sc.extrinsics, k);
        if (sc.emit_segments) fr.segments_override = segs;
        if (sc.render_images) {
            char name[32];
            std::snprintf(name, sizeof(name), "frame_%05d.pgm", i);
            fr.image_ref = name;
            out.images.emplace_back(name, render_lane_image(segs, k.n_h, k.n_v, sc.lane_stroke_px));
        }
        out.frames.push_back(std::move(fr));
    }

    out.frames = inject_noise(std::move(out.frames), sc.noise.gps_sigma_m, sc.noise.pixel_jitter_px, sc.seed);
    if (sc.noise.quantize) {
        for (auto& fr : out.frames) {
            for (auto& td : fr.detections) {
                auto& b = td.det.bbox;
                b.u_min = std::round(b.u_min);
                b.v_min = std::round(b.v_min);
                b.u_max = std::round(b.u_max);
                b.v_max = std::round(b.v_max);
            }
        }
    }
    return out;
}

/// Same-direction scene: one target ahead in the ego lane and one in the adjacent right lane.
inline Scenario scenario_s1() {
    Scenario sc;
    sc.name = "S1";
    sc.duration_s = 70.0;
    sc.extrinsics = {deg2rad(1.0), 1.4};
    sc.ego = {"ego", "car", {1.8, 1.5}, 0.0, 0.0, SpeedProfile::constant(25.0 / 3.6), false};
    sc.targets.push_back({"v1", "car", {1.8, 1.5}, 10.0, 0.0, SpeedProfile::constant(26.5 / 3.6), false});
    sc.targets.push_back({"v2", "car", {1.8, 1.5}, 9.0, 3.5, SpeedProfile::constant(25.5 / 3.6), false});
    return sc;
}

/// Opposite-direction scene: oncoming targets in the adjacent left lane.
inline Scenario scenario_s2() {
    Scenario sc;
    sc.name = "S2";
    sc.duration_s = 12.0;
    sc.extrinsics = {deg2rad(1.0), 1.4};
    sc.ego = {"ego", "car", {1.8, 1.5}, 0.0, 0.0, SpeedProfile::constant(20.0 / 3.6), false};
    sc.targets.push_back({"v1", "car", {1.8, 1.5}, 110.0, -3.5, SpeedProfile::constant(30.0 / 3.6), true});
    sc.lane_lines_m = {-5.25, -1.75, 1.75};
    return sc;
}

}  // namespace geoloc
