#pragma once

// Estimated vs. ground-truth trajectories: time matching, deviation
// statistics and traffic covariates (speeds, inter-vehicle distance).

#include <geoloc/error.hpp>
#include <geoloc/geodesy.hpp>
#include <geoloc/pipeline.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace geoloc {

enum class MatchMode { Interpolate, Nearest };

struct MatchedPair {
    double t = 0.0;
    GeoPoint estimate;
    GeoPoint truth;
    double truth_heading_rad = 0.0;
};

struct MatchResult {
    std::vector<MatchedPair> pairs;
    std::vector<double> unmatched;  // estimate timestamps without a partner
};

namespace detail {

// Per-sample headings of a trace; 0 (north) when the trace never moves.
inline std::vector<double> trace_headings(const std::vector<TimedPoint>& trace) {
    if (trace.size() < 2) return std::vector<double>(trace.size(), 0.0);
    std::vector<GeoPoint> pts;
    pts.reserve(trace.size());
    for (const auto& p : trace) pts.push_back(p.p);
    try {
        return heading_sequence(pts);
    } catch (const Error&) {
        return std::vector<double>(trace.size(), 0.0);
    }
}

inline GeoPoint lerp(const GeoPoint& a, const GeoPoint& b, double w) {
    return {a.lat + w * (b.lat - a.lat), wrap_lon_deg(a.lon + w * wrap_lon_deg(b.lon - a.lon))};
}

/// Position on `trace` at time `t` (clamped to the span).
inline GeoPoint position_at(const std::vector<TimedPoint>& trace, double t) {
    if (t <= trace.front().t) return trace.front().p;
    if (t >= trace.back().t) return trace.back().p;
    const auto hi = std::lower_bound(trace.begin(), trace.end(), t, [](const TimedPoint& p, double v) { return p.t < v; });
    if (hi->t == t) return hi->p;
    const auto lo = hi - 1;
    return lerp(lo->p, hi->p, (t - lo->t) / (hi->t - lo->t));
}

}  // namespace detail

/// Pairs each estimate with the truth at the same instant. Estimates
/// outside the truth span, or farther than `max_dt` from every truth
/// sample, are reported as unmatched.
inline MatchResult match_frames(const std::vector<TimedPoint>& estimates, const std::vector<TimedPoint>& truth,
                                double max_dt = 0.5, MatchMode mode = MatchMode::Interpolate) {
    MatchResult out;
    const auto headings = detail::trace_headings(truth);
    for (const auto& e : estimates) {
        if (truth.empty() || e.t < truth.front().t || e.t > truth.back().t) {
            out.unmatched.push_back(e.t);
            continue;
        }
        const auto hi_it =
            std::lower_bound(truth.begin(), truth.end(), e.t, [](const TimedPoint& p, double v) { return p.t < v; });
        const std::size_t hi = static_cast<std::size_t>(hi_it - truth.begin());
        const std::size_t lo = hi == 0 ? 0 : hi - 1;
        const std::size_t nearest = (truth[hi].t - e.t <= e.t - truth[lo].t) ? hi : lo;
        if (std::abs(truth[nearest].t - e.t) > max_dt) {
            out.unmatched.push_back(e.t);
            continue;
        }
        MatchedPair p;
        p.t = e.t;
        p.estimate = e.p;
        if (mode == MatchMode::Nearest || truth[hi].t == e.t || hi == lo) {
            p.truth = truth[nearest].p;
            p.truth_heading_rad = headings[nearest];
        } else {
            p.truth = detail::lerp(truth[lo].p, truth[hi].p, (e.t - truth[lo].t) / (truth[hi].t - truth[lo].t));
            p.truth_heading_rad = headings[hi];
        }
        out.pairs.push_back(p);
    }
    if (out.pairs.empty()) {
        throw Error(ErrorCode::EmptyIntersection, "no estimate matched the truth trace");
    }
    return out;
}

struct DeviationSample {
    double t = 0.0;
    DeviationVector deviation;
};

struct DeviationStats {
    std::size_t count = 0;
    double min_m = 0.0;
    double avg_m = 0.0;
    double max_m = 0.0;
    double rmse_m = 0.0;
    std::vector<DeviationSample> series;
};

inline DeviationStats deviation_stats(const std::vector<MatchedPair>& pairs, const EarthModel& earth = {}) {
    if (pairs.empty()) throw Error(ErrorCode::EmptyIntersection, "no matched pairs");
    DeviationStats s;
    s.count = pairs.size();
    s.min_m = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const auto& p : pairs) {
        const double mag = great_circle_distance(p.truth, p.estimate, earth);
        s.min_m = std::min(s.min_m, mag);
        s.max_m = std::max(s.max_m, mag);
        sum += mag;
        sum_sq += mag * mag;
        s.series.push_back({p.t, decompose_deviation(p.truth, p.truth_heading_rad, p.estimate, earth)});
    }
    const double n = static_cast<double>(pairs.size());
    s.avg_m = sum / n;
    s.rmse_m = std::sqrt(sum_sq / n);
    return s;
}

struct Range3 {
    double min = 0.0;
    double avg = 0.0;
    double max = 0.0;
};

struct Covariates {
    Range3 ego_speed_kmh;
    Range3 target_speed_kmh;
    Range3 distance_m;
};

namespace detail {

inline Range3 summarize(const std::vector<double>& v) {
    Range3 r;
    if (v.empty()) return r;
    r.min = *std::min_element(v.begin(), v.end());
    r.max = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    r.avg = sum / static_cast<double>(v.size());
    return r;
}

inline std::vector<double> speeds_kmh(const std::vector<TimedPoint>& trace, const EarthModel& earth) {
    if (trace.size() < 2) throw Error(ErrorCode::TraceTooShort, "need at least 2 samples for speed");
    std::vector<double> v;
    for (std::size_t i = 1; i < trace.size(); ++i) {
        const double dt = trace[i].t - trace[i - 1].t;
        if (!(dt > 0.0)) throw Error(ErrorCode::NonMonotoneTrace, "timestamps not strictly increasing");
        v.push_back(great_circle_distance(trace[i - 1].p, trace[i].p, earth) / dt * 3.6);
    }
    return v;
}

}  // namespace detail

/// Speed ranges of both traces and the ego-to-truth distance at each
/// matched instant.
inline Covariates covariates(const std::vector<TimedPoint>& ego_trace, const std::vector<TimedPoint>& truth_trace,
                             const std::vector<MatchedPair>& pairs, const EarthModel& earth = {}) {
    Covariates c;
    c.ego_speed_kmh = detail::summarize(detail::speeds_kmh(ego_trace, earth));
    c.target_speed_kmh = detail::summarize(detail::speeds_kmh(truth_trace, earth));
    std::vector<double> dist;
    for (const auto& p : pairs) {
        dist.push_back(great_circle_distance(detail::position_at(ego_trace, p.t), p.truth, earth));
    }
    c.distance_m = detail::summarize(dist);
    return c;
}

struct ReportCell {
    std::string target_id;
    std::string approach;
    DeviationStats stats;
    std::optional<Covariates> covariates;
    std::vector<double> unmatched;
};

struct EvalReport {
    std::vector<ReportCell> cells;
};

}  // namespace geoloc
