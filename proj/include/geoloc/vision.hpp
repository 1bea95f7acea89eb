#pragma once

// Lane-line vanishing point detection: Canny edges, progressive
// probabilistic Hough transform (PPHT) and robust pairwise intersection.

#include <geoloc/angles.hpp>
#include <geoloc/camera.hpp>
#include <geoloc/error.hpp>
#include <geoloc/image.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace geoloc {

inline constexpr std::uint8_t kEdge = 255;

struct CannyParams {
    double low = 50.0;
    double high = 150.0;
    double blur_sigma = 1.4;
};

struct HoughParams {
    double rho_res = 1.0;          // pixels
    double theta_res = deg2rad(1.0);
    int vote_thresh = 30;
    double min_len = 40.0;         // pixels
    double max_gap = 10.0;         // pixels
    std::uint64_t seed = 42;
};

struct LineSegment {
    PixelPoint a;
    PixelPoint b;

    double length() const { return std::hypot(b.u - a.u, b.v - a.v); }

    /// Slope angle of the segment in the pixel frame, in (-pi/2, pi/2].
    double slope_angle() const {
        const double du = b.u - a.u;
        const double dv = b.v - a.v;
        if (du == 0.0) return kPi / 2.0;
        return std::atan(dv / du);
    }

    PixelPoint midpoint() const { return {(a.u + b.u) / 2.0, (a.v + b.v) / 2.0}; }
};

struct VanishingPoint {
    PixelPoint j;
    int support_count = 0;
    double dispersion_px = 0.0;
};

/// Which segments count as lane candidates.
struct LaneFilter {
    double roi_top_v = 0.0;  // segment midpoints must lie at or below this row
    double min_abs_slope = deg2rad(20.0);
    double max_abs_slope = deg2rad(70.0);

    /// Lower `fraction` of an image of `n_v` rows.
    static LaneFilter lower_fraction(int n_v, double fraction = 0.45) {
        LaneFilter f;
        f.roi_top_v = n_v * (1.0 - fraction);
        return f;
    }
};

namespace detail {

struct FloatImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    FloatImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0.0) {}
    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    // Replicated border.
    double clamped(int x, int y) const {
        return at(std::clamp(x, 0, width - 1), std::clamp(y, 0, height - 1));
    }
};

inline FloatImage gaussian_blur(const FloatImage& src, double sigma) {
    if (sigma <= 0.0) return src;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += kernel[i + radius];
    }
    for (double& k : kernel) k /= sum;

    FloatImage tmp(src.width, src.height);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * src.clamped(x + i, y);
            tmp.at(x, y) = acc;
        }
    }
    FloatImage out(src.width, src.height);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp.clamped(x, y + i);
            out.at(x, y) = acc;
        }
    }
    return out;
}

}  // namespace detail

/// Binary edge map (0 or kEdge) with one-pixel-wide edges.
inline GrayImage canny_edges(const GrayImage& img, double low_thresh, double high_thresh, double blur_sigma) {
    if (!(low_thresh > 0.0 && low_thresh < high_thresh)) {
        throw Error(ErrorCode::BadThresholds, "need 0 < low < high for Canny thresholds");
    }
    if (!(blur_sigma >= 0.0)) {
        throw Error(ErrorCode::BadThresholds, "blur sigma must be non-negative");
    }
    GrayImage edges(img.width, img.height, 0);
    if (img.width == 0 || img.height == 0) return edges;

    detail::FloatImage src(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) src.data[i] = img.pixels[i];
    const detail::FloatImage smooth = detail::gaussian_blur(src, blur_sigma);

    const int w = img.width;
    const int h = img.height;
    detail::FloatImage gx(w, h), gy(w, h), mag(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto p = [&](int dx, int dy) { return smooth.clamped(x + dx, y + dy); };
            gx.at(x, y) = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            gy.at(x, y) = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            mag.at(x, y) = std::sqrt(gx.at(x, y) * gx.at(x, y) + gy.at(x, y) * gy.at(x, y));
        }
    }

    // Non-maximum suppression along the quantized gradient direction. Ties
    // are broken towards the lower-index neighbour so plateaus stay 1 px wide.
    constexpr double kTan22 = 0.41421356237309503;
    constexpr double kTan67 = 2.414213562373095;
    enum : std::uint8_t { kNone = 0, kWeak = 1, kStrong = 2 };
    std::vector<std::uint8_t> state(static_cast<std::size_t>(w) * h, kNone);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double m = mag.at(x, y);
            if (m <= low_thresh) continue;
            const double ax = std::abs(gx.at(x, y));
            const double ay = std::abs(gy.at(x, y));
            int dx = 0;
            int dy = 0;
            if (ay <= kTan22 * ax) {
                dx = 1;
            } else if (ay >= kTan67 * ax) {
                dy = 1;
            } else {
                dx = 1;
                dy = (gx.at(x, y) * gy.at(x, y) > 0.0) ? 1 : -1;
            }
            const double before = mag.clamped(x - dx, y - dy);
            const double after = mag.clamped(x + dx, y + dy);
            if (m >= before && m > after) {
                state[static_cast<std::size_t>(y) * w + x] = m > high_thresh ? kStrong : kWeak;
            }
        }
    }

    // Hysteresis: keep weak pixels 8-connected to a strong one.
    std::vector<int> stack;
    for (int i = 0; i < w * h; ++i) {
        if (state[i] != kStrong) continue;
        stack.push_back(i);
        edges.pixels[i] = kEdge;
        while (!stack.empty()) {
            const int cur = stack.back();
            stack.pop_back();
            const int cx = cur % w;
            const int cy = cur / w;
            for (int ny = cy - 1; ny <= cy + 1; ++ny) {
                for (int nx = cx - 1; nx <= cx + 1; ++nx) {
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const int n = ny * w + nx;
                    if (state[n] != kNone && edges.pixels[n] == 0) {
                        edges.pixels[n] = kEdge;
                        stack.push_back(n);
                    }
                }
            }
        }
    }
    return edges;
}

inline GrayImage canny_edges(const GrayImage& img, const CannyParams& p = {}) {
    return canny_edges(img, p.low, p.high, p.blur_sigma);
}

namespace detail {

struct PixelIndex {
    int x = 0;
    int y = 0;
};

struct SegmentFit {
    LineSegment seg;
    std::vector<PixelIndex> points;
};

// Total-least-squares line through `pts`; endpoints are the extreme
// projections onto the fitted line.
inline LineSegment fit_segment(const std::vector<PixelIndex>& pts) {
    double mx = 0.0, my = 0.0;
    for (const auto& p : pts) {
        mx += p.x;
        my += p.y;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const auto& p : pts) {
        const double dx = p.x - mx;
        const double dy = p.y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    const double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    const double cx = std::cos(angle);
    const double cy = std::sin(angle);
    double tmin = std::numeric_limits<double>::infinity();
    double tmax = -tmin;
    for (const auto& p : pts) {
        const double t = (p.x - mx) * cx + (p.y - my) * cy;
        tmin = std::min(tmin, t);
        tmax = std::max(tmax, t);
    }
    LineSegment s{{mx + tmin * cx, my + tmin * cy}, {mx + tmax * cx, my + tmax * cy}};
    if (s.b.u < s.a.u || (s.b.u == s.a.u && s.b.v < s.a.v)) std::swap(s.a, s.b);
    return s;
}

inline double angle_between(double a, double b) {
    double d = std::abs(a - b);
    d = std::fmod(d, kPi);
    return std::min(d, kPi - d);
}

inline double point_line_distance(const PixelPoint& p, const LineSegment& s) {
    const double du = s.b.u - s.a.u;
    const double dv = s.b.v - s.a.v;
    const double len = std::hypot(du, dv);
    return std::abs((p.u - s.a.u) * dv - (p.v - s.a.v) * du) / len;
}

// Gap between two collinear-ish segments measured along `s`'s direction;
// negative when they overlap.
inline double along_gap(const LineSegment& s, const LineSegment& o) {
    const double len = s.length();
    const double cx = (s.b.u - s.a.u) / len;
    const double cy = (s.b.v - s.a.v) / len;
    const auto proj = [&](const PixelPoint& p) { return (p.u - s.a.u) * cx + (p.v - s.a.v) * cy; };
    const double o0 = std::min(proj(o.a), proj(o.b));
    const double o1 = std::max(proj(o.a), proj(o.b));
    return std::max(o0 - len, 0.0 - o1);
}

}  // namespace detail

/// Progressive probabilistic Hough transform over a binary edge map.
///
/// Edge pixels are visited in a seeded random order; each votes into the
/// (rho, theta) accumulator, and as soon as a cell reaches `vote_thresh` the
/// corresponding line is walked from the current pixel in both directions
/// (tolerating gaps up to `max_gap`). Pixels on the walked corridor are
/// consumed and their votes retracted. Accepted segments are refitted by
/// total least squares and collinear pieces are merged.
inline std::vector<LineSegment> ppht_segments(const GrayImage& edges, const HoughParams& params = {}) {
    if (!(params.rho_res > 0.0) || !(params.theta_res > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "Hough resolutions must be positive");
    }
    const int w = edges.width;
    const int h = edges.height;
    const int num_angle = std::max(1, static_cast<int>(std::lround(kPi / params.theta_res)));
    const int num_rho = static_cast<int>(std::lround(((w + h) * 2 + 1) / params.rho_res));
    std::vector<double> cos_t(num_angle), sin_t(num_angle);
    for (int n = 0; n < num_angle; ++n) {
        cos_t[n] = std::cos(n * params.theta_res) / params.rho_res;
        sin_t[n] = std::sin(n * params.theta_res) / params.rho_res;
    }
    std::vector<int> accum(static_cast<std::size_t>(num_angle) * num_rho, 0);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * h, 0);
    std::vector<std::uint8_t> voted(mask.size(), 0);
    std::vector<detail::PixelIndex> pending;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (edges.at(x, y) != 0) {
                mask[static_cast<std::size_t>(y) * w + x] = 1;
                pending.push_back({x, y});
            }
        }
    }

    const auto rho_bin = [&](int x, int y, int n) {
        return static_cast<int>(std::lround(x * cos_t[n] + y * sin_t[n])) + (num_rho - 1) / 2;
    };
    const auto vote = [&](int x, int y, int delta) {
        for (int n = 0; n < num_angle; ++n) accum[static_cast<std::size_t>(n) * num_rho + rho_bin(x, y, n)] += delta;
    };
    const auto is_set = [&](int x, int y) { return x >= 0 && y >= 0 && x < w && y < h && mask[static_cast<std::size_t>(y) * w + x]; };

    std::mt19937_64 rng(params.seed);
    std::vector<detail::SegmentFit> found;

    for (std::size_t count = pending.size(); count > 0; --count) {
        std::uniform_int_distribution<std::size_t> pick(0, count - 1);
        const std::size_t idx = pick(rng);
        const detail::PixelIndex pt = pending[idx];
        pending[idx] = pending[count - 1];
        if (!mask[static_cast<std::size_t>(pt.y) * w + pt.x]) continue;

        vote(pt.x, pt.y, +1);
        voted[static_cast<std::size_t>(pt.y) * w + pt.x] = 1;
        int best_votes = 0;
        int best_n = 0;
        for (int n = 0; n < num_angle; ++n) {
            const int v = accum[static_cast<std::size_t>(n) * num_rho + rho_bin(pt.x, pt.y, n)];
            if (v > best_votes) {
                best_votes = v;
                best_n = n;
            }
        }
        if (best_votes < params.vote_thresh) continue;

        // Line direction is perpendicular to the accumulator normal.
        const double dir_x = -std::sin(best_n * params.theta_res);
        const double dir_y = std::cos(best_n * params.theta_res);
        const bool x_major = std::abs(dir_x) > std::abs(dir_y);
        const double step_x = x_major ? std::copysign(1.0, dir_x) : dir_x / std::abs(dir_y);
        const double step_y = x_major ? dir_y / std::abs(dir_x) : std::copysign(1.0, dir_y);

        // Walk both directions; a hit is any set pixel within one pixel
        // across the walking direction.
        std::array<double, 2> reach{0.0, 0.0};
        for (int k = 0; k < 2; ++k) {
            const double sgn = k == 0 ? 1.0 : -1.0;
            int gap = 0;
            for (int t = 1;; ++t) {
                const double fx = pt.x + sgn * t * step_x;
                const double fy = pt.y + sgn * t * step_y;
                const int ix = static_cast<int>(std::lround(fx));
                const int iy = static_cast<int>(std::lround(fy));
                if (ix < 0 || iy < 0 || ix >= w || iy >= h) break;
                bool hit = false;
                for (int o = -1; o <= 1 && !hit; ++o) {
                    hit = x_major ? is_set(ix, iy + o) : is_set(ix + o, iy);
                }
                if (hit) {
                    gap = 0;
                    reach[k] = t;
                } else if (++gap > params.max_gap) {
                    break;
                }
            }
        }

        std::vector<detail::PixelIndex> consumed;
        for (int k = 0; k < 2; ++k) {
            const double sgn = k == 0 ? 1.0 : -1.0;
            for (int t = (k == 0 ? 0 : 1); t <= reach[k]; ++t) {
                const int ix = static_cast<int>(std::lround(pt.x + sgn * t * step_x));
                const int iy = static_cast<int>(std::lround(pt.y + sgn * t * step_y));
                for (int o = -1; o <= 1; ++o) {
                    const int cx = x_major ? ix : ix + o;
                    const int cy = x_major ? iy + o : iy;
                    if (!is_set(cx, cy)) continue;
                    consumed.push_back({cx, cy});
                    mask[static_cast<std::size_t>(cy) * w + cx] = 0;
                }
            }
        }
        const double span = (reach[0] + reach[1]) * std::hypot(step_x, step_y);
        const bool good = span >= params.min_len && consumed.size() >= 2;
        if (!good) continue;
        for (const auto& c : consumed) {
            auto& v = voted[static_cast<std::size_t>(c.y) * w + c.x];
            if (v) {
                vote(c.x, c.y, -1);
                v = 0;
            }
        }
        found.push_back({detail::fit_segment(consumed), std::move(consumed)});
    }

    // Merge pieces of the same line split by walking drift or gaps.
    const double merge_angle = std::max(2.0 * params.theta_res, deg2rad(1.0));
    const double merge_dist = std::max(2.0 * params.rho_res, 2.0);
    bool merged = true;
    while (merged) {
        merged = false;
        for (std::size_t i = 0; i < found.size() && !merged; ++i) {
            for (std::size_t j = i + 1; j < found.size() && !merged; ++j) {
                const LineSegment& a = found[i].seg;
                const LineSegment& b = found[j].seg;
                if (detail::angle_between(a.slope_angle(), b.slope_angle()) > merge_angle) continue;
                if (std::max(detail::point_line_distance(b.a, a), detail::point_line_distance(b.b, a)) > merge_dist &&
                    std::max(detail::point_line_distance(a.a, b), detail::point_line_distance(a.b, b)) > merge_dist) {
                    continue;
                }
                if (detail::along_gap(a, b) > params.max_gap) continue;
                auto& pts = found[i].points;
                pts.insert(pts.end(), found[j].points.begin(), found[j].points.end());
                found[i].seg = detail::fit_segment(pts);
                found.erase(found.begin() + static_cast<std::ptrdiff_t>(j));
                merged = true;
            }
        }
    }

    // Pixel (x, y) covers [x, x + 1) x [y, y + 1); report centre coordinates.
    std::vector<LineSegment> out;
    out.reserve(found.size());
    for (const auto& f : found) {
        if (f.seg.length() < params.min_len) continue;
        out.push_back({{f.seg.a.u + 0.5, f.seg.a.v + 0.5}, {f.seg.b.u + 0.5, f.seg.b.v + 0.5}});
    }
    return out;
}

/// Keeps segments inside the region of interest whose slope looks like a
/// lane boundary.
inline std::vector<LineSegment> lane_candidates(const std::vector<LineSegment>& segments, const LaneFilter& filter) {
    std::vector<LineSegment> out;
    for (const auto& s : segments) {
        if (s.length() <= 0.0) continue;
        const double a = std::abs(s.slope_angle());
        if (s.midpoint().v < filter.roi_top_v) continue;
        if (a < filter.min_abs_slope || a > filter.max_abs_slope) continue;
        out.push_back(s);
    }
    return out;
}

namespace detail {

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::array<double, 3> homogeneous_line(const LineSegment& s) {
    return {s.a.v - s.b.v, s.b.u - s.a.u, s.a.u * s.b.v - s.b.u * s.a.v};
}

}  // namespace detail

inline constexpr double kParallelTolerance = deg2rad(1.0);

/// Coordinate-wise median of the intersections of every non-parallel pair
/// of lane candidates.
inline VanishingPoint vanishing_point(const std::vector<LineSegment>& segments, const LaneFilter& filter) {
    const auto lanes = lane_candidates(segments, filter);
    if (lanes.size() < 2) {
        throw Error(ErrorCode::InsufficientLines,
                    "need at least 2 lane candidates, found " + std::to_string(lanes.size()));
    }
    std::vector<double> us, vs;
    for (std::size_t i = 0; i < lanes.size(); ++i) {
        for (std::size_t j = i + 1; j < lanes.size(); ++j) {
            if (detail::angle_between(lanes[i].slope_angle(), lanes[j].slope_angle()) < kParallelTolerance) continue;
            const auto l1 = detail::homogeneous_line(lanes[i]);
            const auto l2 = detail::homogeneous_line(lanes[j]);
            const double x = l1[1] * l2[2] - l1[2] * l2[1];
            const double y = l1[2] * l2[0] - l1[0] * l2[2];
            const double z = l1[0] * l2[1] - l1[1] * l2[0];
            if (z == 0.0) continue;
            us.push_back(x / z);
            vs.push_back(y / z);
        }
    }
    if (us.empty()) {
        throw Error(ErrorCode::IllConditioned, "all lane candidate pairs are within 1 degree of parallel");
    }
    VanishingPoint vp;
    vp.j = {detail::median(us), detail::median(vs)};
    vp.support_count = static_cast<int>(us.size());
    std::vector<double> spread(us.size());
    for (std::size_t i = 0; i < us.size(); ++i) spread[i] = std::hypot(us[i] - vp.j.u, vs[i] - vp.j.v);
    vp.dispersion_px = detail::median(std::move(spread));
    return vp;
}

/// Edge detection, segment extraction and vanishing point in one call.
inline VanishingPoint vanishing_point_from_image(const GrayImage& img, const LaneFilter& filter,
                                                 const CannyParams& canny = {}, const HoughParams& hough = {}) {
    return vanishing_point(ppht_segments(canny_edges(img, canny), hough), filter);
}

}  // namespace geoloc
