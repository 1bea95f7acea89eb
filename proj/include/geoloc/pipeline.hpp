#pragma once

// End-to-end estimation. Phase 1 (trace preprocessing, headings and
// calibration) runs sequentially in time order; phase 2 (per-frame target
// estimation) is independent per frame and may run on several threads.

#include <geoloc/camera.hpp>
#include <geoloc/error.hpp>
#include <geoloc/extrinsics.hpp>
#include <geoloc/geodesy.hpp>
#include <geoloc/groundplane.hpp>
#include <geoloc/image.hpp>
#include <geoloc/ranging.hpp>
#include <geoloc/vision.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace geoloc {

struct TimedPoint {
    double t = 0.0;
    GeoPoint p;
};

struct TargetDetection {
    std::string target_id;
    Detection det;
};

struct FrameRecord {
    double t = 0.0;
    GeoPoint ego;
    std::vector<TargetDetection> detections;
    std::optional<std::string> image_ref;
    std::optional<VanishingPoint> vanishing_override;
    std::optional<std::vector<LineSegment>> segments_override;
};

struct EgoState {
    GeoPoint position;
    double beta_rad = 0.0;
    double speed_mps = 0.0;
};

enum class Approach { Image, Geometric };

constexpr const char* to_string(Approach a) { return a == Approach::Image ? "image" : "geometric"; }

struct TargetEstimate {
    double t = 0.0;
    std::string target_id;
    Approach approach = Approach::Image;
    double d_m = 0.0;
    double theta_rad = 0.0;
    double alpha_rad = 0.0;
    Side side = Side::Same;
    GeoPoint position;
};

struct SkippedDetection {
    double t = 0.0;
    std::string target_id;
    Approach approach = Approach::Image;
    ErrorCode code = ErrorCode::InvalidArgument;
    std::string reason;
};

/// Linearly interpolates the raw trace at `frame_times`, then applies a
/// centered moving average of `window` samples (truncated symmetrically at
/// the ends).
inline std::vector<GeoPoint> preprocess_trace(const std::vector<TimedPoint>& raw, const std::vector<double>& frame_times,
                                              int window = 3) {
    if (raw.empty()) throw Error(ErrorCode::TraceTooShort, "empty GPS trace");
    if (window < 1) throw Error(ErrorCode::InvalidArgument, "smoothing window must be >= 1");
    for (std::size_t i = 1; i < raw.size(); ++i) {
        if (!(raw[i].t > raw[i - 1].t)) {
            throw Error(ErrorCode::NonMonotoneTrace, "GPS timestamps not strictly increasing at index " + std::to_string(i));
        }
    }
    std::vector<GeoPoint> interp;
    interp.reserve(frame_times.size());
    for (double t : frame_times) {
        if (t < raw.front().t || t > raw.back().t) {
            throw Error(ErrorCode::FrameOutsideTrace, "frame time " + std::to_string(t) + " outside GPS trace span");
        }
        const auto hi = std::lower_bound(raw.begin(), raw.end(), t, [](const TimedPoint& p, double v) { return p.t < v; });
        if (hi->t == t) {
            interp.push_back(hi->p);
            continue;
        }
        const auto lo = hi - 1;
        const double a = (t - lo->t) / (hi->t - lo->t);
        const double dlon = wrap_lon_deg(hi->p.lon - lo->p.lon);
        interp.push_back({lo->p.lat + a * (hi->p.lat - lo->p.lat), wrap_lon_deg(lo->p.lon + a * dlon)});
    }
    if (window == 1) return interp;

    const int half = window / 2;
    const int n = static_cast<int>(interp.size());
    std::vector<GeoPoint> out(interp.size());
    for (int i = 0; i < n; ++i) {
        const int k = std::min({half, i, n - 1 - i});
        double lat = 0.0;
        double dlon = 0.0;
        for (int j = i - k; j <= i + k; ++j) {
            lat += interp[j].lat;
            dlon += wrap_lon_deg(interp[j].lon - interp[i].lon);
        }
        const double cnt = 2.0 * k + 1.0;
        out[i] = {lat / cnt, wrap_lon_deg(interp[i].lon + dlon / cnt)};
    }
    return out;
}

/// Heading of each position from its predecessor. The first frame takes
/// the first defined heading; stationary frames keep the previous one.
inline std::vector<double> heading_sequence(const std::vector<GeoPoint>& positions) {
    if (positions.size() < 2) throw Error(ErrorCode::TraceTooShort, "need at least 2 positions for a heading");
    std::vector<std::optional<double>> raw(positions.size());
    for (std::size_t i = 1; i < positions.size(); ++i) {
        try {
            raw[i] = bearing(positions[i - 1], positions[i]);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateSegment) throw;
        }
    }
    const auto first = std::find_if(raw.begin() + 1, raw.end(), [](const auto& b) { return b.has_value(); });
    if (first == raw.end()) throw Error(ErrorCode::DegenerateSegment, "trace never moves; heading undefined");
    std::vector<double> beta(positions.size());
    double last = **first;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (raw[i]) last = *raw[i];
        beta[i] = last;
    }
    return beta;
}

inline double compose_alpha(double beta_rad, double theta_rad, Side side) {
    switch (side) {
        case Side::Same: return wrap_pi(beta_rad);
        case Side::Left: return wrap_pi(beta_rad - std::abs(theta_rad));
        case Side::Right: return wrap_pi(beta_rad + std::abs(theta_rad));
    }
    return wrap_pi(beta_rad);
}

inline std::vector<EgoState> ego_states(const std::vector<TimedPoint>& raw, const std::vector<double>& frame_times,
                                        int window = 3, const EarthModel& earth = {}) {
    const auto positions = preprocess_trace(raw, frame_times, window);
    const auto beta = heading_sequence(positions);
    std::vector<EgoState> out(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        out[i].position = positions[i];
        out[i].beta_rad = beta[i];
        if (i > 0) {
            out[i].speed_mps = great_circle_distance(positions[i - 1], positions[i], earth) / (frame_times[i] - frame_times[i - 1]);
        }
    }
    if (out.size() > 1) out[0].speed_mps = out[1].speed_mps;
    return out;
}

/// Distance, relative angle and side of one detection for one approach.
inline RangeMeasurement measure_detection(const Detection& det, Approach approach, const CameraIntrinsics& k,
                                          const std::optional<CameraExtrinsics>& ext, const DimsTable& dims,
                                          const RangingWeights& weights = {}) {
    if (approach == Approach::Image) return measure_by_size(det, dims, k, weights);
    if (!ext) throw Error(ErrorCode::NoCalibration, "no camera pitch/height available for this frame");
    return range_and_angle(back_project(det.anchor(), *ext, k));
}

inline TargetEstimate estimate_detection(double t, const TargetDetection& td, const EgoState& ego, Approach approach,
                                         const CameraIntrinsics& k, const std::optional<CameraExtrinsics>& ext,
                                         const DimsTable& dims, const RangingWeights& weights = {},
                                         const EarthModel& earth = {}) {
    const RangeMeasurement m = measure_detection(td.det, approach, k, ext, dims, weights);
    TargetEstimate e;
    e.t = t;
    e.target_id = td.target_id;
    e.approach = approach;
    e.d_m = m.d_m;
    e.theta_rad = m.theta_rad;
    e.side = m.side;
    e.alpha_rad = compose_alpha(ego.beta_rad, m.theta_rad, m.side);
    e.position = destination(ego.position, e.alpha_rad, m.d_m, earth);
    return e;
}

struct FrameResult {
    std::vector<TargetEstimate> estimates;
    std::vector<SkippedDetection> skipped;
};

/// One estimate per detection per approach; failing detections are skipped
/// and reported, never abort the frame.
inline FrameResult estimate_frame(const FrameRecord& frame, const EgoState& ego, const CameraIntrinsics& k,
                                  const std::optional<CameraExtrinsics>& ext, const DimsTable& dims,
                                  const std::vector<Approach>& approaches, const RangingWeights& weights = {},
                                  const EarthModel& earth = {}) {
    FrameResult out;
    for (const Approach a : approaches) {
        for (const auto& td : frame.detections) {
            try {
                out.estimates.push_back(estimate_detection(frame.t, td, ego, a, k, ext, dims, weights, earth));
            } catch (const Error& e) {
                out.skipped.push_back({frame.t, td.target_id, a, e.code(), e.what()});
            }
        }
    }
    return out;
}

enum class CalibrationMode { Fixed, Auto };

struct PipelineConfig {
    std::vector<Approach> approaches{Approach::Image, Approach::Geometric};
    RangingWeights weights;
    int smoothing_window = 3;
    CalibrationMode calibration = CalibrationMode::Fixed;
    CameraExtrinsics fixed_extrinsics;
    CalibrationParams calibration_params;
    double roi_fraction = 0.45;
    double min_slope_deg = 20.0;
    double max_slope_deg = 70.0;
    CannyParams canny;
    HoughParams hough;
    std::string image_dir;
    unsigned jobs = 1;
    EarthModel earth;
};

struct PipelineResult {
    std::vector<EgoState> ego;
    std::vector<TargetEstimate> estimates;
    std::vector<SkippedDetection> skipped;
    std::vector<CalibrationSample> calibration;
    std::optional<CameraExtrinsics> final_extrinsics;
    bool calibration_frozen = false;
};

/// Raw per-frame pitch and height for auto calibration.
inline CalibrationSample calibrate_frame(const FrameRecord& frame, const CameraIntrinsics& k, const DimsTable& dims,
                                         const PipelineConfig& cfg) {
    CalibrationSample s;
    s.t = frame.t;
    LaneFilter filter = LaneFilter::lower_fraction(k.n_v, cfg.roi_fraction);
    filter.min_abs_slope = deg2rad(cfg.min_slope_deg);
    filter.max_abs_slope = deg2rad(cfg.max_slope_deg);

    std::optional<VanishingPoint> vp;
    try {
        if (frame.vanishing_override) {
            vp = frame.vanishing_override;
        } else if (frame.segments_override) {
            vp = vanishing_point(*frame.segments_override, filter);
        } else if (frame.image_ref) {
            std::filesystem::path path(*frame.image_ref);
            if (path.is_relative() && !cfg.image_dir.empty()) path = std::filesystem::path(cfg.image_dir) / path;
            const GrayImage img = read_pgm_file(path.string());
            if (img.width != k.n_h || img.height != k.n_v) {
                throw Error(ErrorCode::InvalidArgument, "image " + path.string() + " does not match camera resolution");
            }
            HoughParams hough = cfg.hough;
            vp = vanishing_point_from_image(img, filter, cfg.canny, hough);
        } else {
            s.note = "no lane evidence";
            return s;
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ParseError || e.code() == ErrorCode::InvalidArgument) throw;
        s.note = e.what();
        return s;
    }
    s.dispersion_px = vp->dispersion_px;
    if (vp->dispersion_px > cfg.calibration_params.max_dispersion_px) {
        s.note = "vanishing point too dispersed";
        return s;
    }
    try {
        s.pitch_rad = pitch_from_vp(*vp, k);
    } catch (const Error& e) {
        s.note = e.what();
        return s;
    }

    // Height from the most central detection with a usable size-ratio distance.
    const TargetDetection* best = nullptr;
    for (const auto& td : frame.detections) {
        if (dims.find(td.det.class_label) == dims.end()) continue;
        if (td.det.bbox.width() < kMinBoxPx || td.det.bbox.height() < kMinBoxPx) continue;
        if (!best || std::abs(td.det.anchor().u - k.principal.u) < std::abs(best->det.anchor().u - k.principal.u)) {
            best = &td;
        }
    }
    if (!best) {
        s.note = "no detection for height";
        return s;
    }
    try {
        const double d = distance_from_bbox(best->det, dims, k, cfg.weights);
        s.height_m = height_from_thales(d, best->det.anchor(), *s.pitch_rad, k);
    } catch (const Error& e) {
        s.note = e.what();
    }
    return s;
}

inline PipelineResult run_pipeline(const std::vector<FrameRecord>& frames, const CameraIntrinsics& k,
                                   const DimsTable& dims, const PipelineConfig& cfg,
                                   const std::vector<TimedPoint>* gps_trace = nullptr) {
    if (frames.size() < 2) throw Error(ErrorCode::TraceTooShort, "need at least 2 frames");
    std::vector<double> times;
    std::vector<TimedPoint> own;
    for (const auto& f : frames) {
        if (!times.empty() && !(f.t > times.back())) {
            throw Error(ErrorCode::NonMonotoneTrace, "frame timestamps not strictly increasing at t=" + std::to_string(f.t));
        }
        times.push_back(f.t);
        own.push_back({f.t, f.ego});
    }

    PipelineResult result;
    result.ego = ego_states(gps_trace ? *gps_trace : own, times, cfg.smoothing_window, cfg.earth);

    std::vector<std::optional<CameraExtrinsics>> ext(frames.size());
    const bool needs_geometry =
        std::find(cfg.approaches.begin(), cfg.approaches.end(), Approach::Geometric) != cfg.approaches.end();
    if (cfg.calibration == CalibrationMode::Fixed) {
        std::fill(ext.begin(), ext.end(), cfg.fixed_extrinsics);
        result.final_extrinsics = cfg.fixed_extrinsics;
    } else if (needs_geometry) {
        Calibrator cal(cfg.calibration_params);
        for (std::size_t i = 0; i < frames.size(); ++i) {
            ext[i] = cal.push(calibrate_frame(frames[i], k, dims, cfg)).used;
        }
        result.calibration = cal.history();
        result.final_extrinsics = cal.current();
        result.calibration_frozen = cal.frozen();
    }

    std::vector<FrameResult> per_frame(frames.size());
    const auto work = [&](std::size_t begin, std::size_t step) {
        for (std::size_t i = begin; i < frames.size(); i += step) {
            per_frame[i] = estimate_frame(frames[i], result.ego[i], k, ext[i], dims, cfg.approaches, cfg.weights, cfg.earth);
        }
    };
    const std::size_t jobs = std::clamp<std::size_t>(cfg.jobs, 1, frames.size());
    if (jobs == 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(work, j, jobs);
    }
    for (auto& fr : per_frame) {
        result.estimates.insert(result.estimates.end(), fr.estimates.begin(), fr.estimates.end());
        result.skipped.insert(result.skipped.end(), fr.skipped.begin(), fr.skipped.end());
    }
    return result;
}

}  // namespace geoloc
