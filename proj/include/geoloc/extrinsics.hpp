#pragma once

// Camera self-calibration: pitch from the vanishing point, mounting height
// from similar triangles against a known forward distance.

#include <geoloc/camera.hpp>
#include <geoloc/error.hpp>
#include <geoloc/vision.hpp>

#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace geoloc {

/// Pitch (positive = optical axis tilted up) from the vanishing point of
/// forward road lines.
inline double pitch_from_vp(const VanishingPoint& vp, const CameraIntrinsics& k) {
    const double dv = vp.j.v - k.principal.v;
    if (!std::isfinite(vp.j.u) || !std::isfinite(dv) || !(std::abs(dv) < k.n_v)) {
        throw Error(ErrorCode::InvalidArgument, "vanishing point is not finite or too far off the image");
    }
    return std::atan2(dv, k.f);
}

/// Intermediate lengths of the similar-triangle construction. `tilt` is the
/// downward tilt of the optical axis (the negated pitch).
struct ThalesGeometry {
    double A = 0.0;  // f / cos(tilt), pixels
    double B = 0.0;  // h * tan(tilt), meters
    double E = 0.0;  // h / cos(tilt), meters
    double G = 0.0;  // f * tan(tilt), pixels
    double K = 0.0;  // G + N_px, pixels
    double N_px = 0.0;

    static ThalesGeometry make(double height_m, double pitch_rad, double n_px, double f) {
        const double tilt = -pitch_rad;
        ThalesGeometry g;
        g.N_px = n_px;
        g.A = f / std::cos(tilt);
        g.B = height_m * std::tan(tilt);
        g.E = height_m / std::cos(tilt);
        g.G = f * std::tan(tilt);
        g.K = g.G + n_px;
        return g;
    }
};

/// Camera height from the forward ground distance `d_m` to a road point
/// imaged at `anchor`, via K / E = A / (d + B).
inline double height_from_thales(double d_m, const PixelPoint& anchor, double pitch_rad, const CameraIntrinsics& k) {
    if (!(d_m > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "Thales distance must be positive");
    }
    const double n_px = anchor.v - k.principal.v;
    const double tilt = -pitch_rad;
    const double t = std::tan(tilt);
    const double c2 = std::cos(tilt) * std::cos(tilt);
    const double kk = n_px + k.f * t;
    const double denom = k.f - kk * t * c2;
    if (!(denom > 0.0)) {
        throw Error(ErrorCode::HorizonAnchor, "Thales denominator is not positive");
    }
    const double h = kk * d_m * c2 / denom;
    if (!(h > 0.0)) {
        throw Error(ErrorCode::NonPositiveHeight, "anchor on or above the horizon yields height " + std::to_string(h));
    }
    return h;
}

struct CalibrationParams {
    std::size_t window = 15;
    double freeze_pitch_mad = deg2rad(0.2);
    double freeze_height_mad = 0.05;
    double max_dispersion_px = 20.0;  // vanishing points noisier than this are ignored
};

struct CalibrationSample {
    double t = 0.0;
    std::optional<double> pitch_rad;
    std::optional<double> height_m;
    double dispersion_px = 0.0;
    std::string note;
    std::optional<CameraExtrinsics> used;  // estimate in force after this frame
    bool frozen = false;
};

/// Running-median calibration. Feed per-frame raw estimates in time order;
/// the estimate freezes once a full window agrees to within the MAD limits.
class Calibrator {
public:
    explicit Calibrator(CalibrationParams params = {}) : params_(params) {}

    const CalibrationSample& push(CalibrationSample sample) {
        if (!frozen_) {
            if (sample.pitch_rad) push_window(pitches_, *sample.pitch_rad);
            if (sample.height_m) push_window(heights_, *sample.height_m);
            if (!pitches_.empty() && !heights_.empty()) {
                current_ = CameraExtrinsics{median_of(pitches_), median_of(heights_)};
                if (pitches_.size() == params_.window && heights_.size() == params_.window &&
                    mad_of(pitches_) <= params_.freeze_pitch_mad && mad_of(heights_) <= params_.freeze_height_mad) {
                    frozen_ = true;
                }
            }
        }
        sample.used = current_;
        sample.frozen = frozen_;
        history_.push_back(std::move(sample));
        return history_.back();
    }

    bool frozen() const { return frozen_; }
    const std::optional<CameraExtrinsics>& current() const { return current_; }
    const std::vector<CalibrationSample>& history() const { return history_; }
    const CalibrationParams& params() const { return params_; }

private:
    void push_window(std::deque<double>& q, double v) const {
        q.push_back(v);
        while (q.size() > params_.window) q.pop_front();
    }
    static double median_of(const std::deque<double>& q) { return detail::median({q.begin(), q.end()}); }
    static double mad_of(const std::deque<double>& q) {
        const double m = median_of(q);
        std::vector<double> dev;
        dev.reserve(q.size());
        for (double v : q) dev.push_back(std::abs(v - m));
        return detail::median(std::move(dev));
    }

    CalibrationParams params_;
    std::deque<double> pitches_;
    std::deque<double> heights_;
    std::optional<CameraExtrinsics> current_;
    bool frozen_ = false;
    std::vector<CalibrationSample> history_;
};

}  // namespace geoloc
