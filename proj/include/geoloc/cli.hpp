#pragma once

// Command-line front end. Each subcommand resolves its options, validates
// every input before computing, and writes all outputs through atomic
// renames together with a config echo that reproduces the run.
//
// Exit codes:
//   0  success (per-detection failures are logged, not fatal)
//   1  unexpected internal error
//   2  configuration or parse error, invalid scenario
//   3  fatal trace or estimation error
//   4  estimates and truth share no matched instant

#include <geoloc/io.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace geoloc::cli {

using io::json;
using io::ordered_json;

enum ExitCode : int { kOk = 0, kInternal = 1, kConfig = 2, kFatal = 3, kEmpty = 4 };

inline int exit_code_for(ErrorCode c) {
    switch (c) {
        case ErrorCode::ParseError:
        case ErrorCode::InvalidScenario:
        case ErrorCode::InvalidFov:
        case ErrorCode::InvalidArgument:
        case ErrorCode::BadThresholds:
        case ErrorCode::UnknownClass:
            return kConfig;
        case ErrorCode::EmptyIntersection:
            return kEmpty;
        default:
            return kFatal;
    }
}

// ---------------------------------------------------------------------------
// Options

struct VisionOptions {
    double canny_low = 50.0;
    double canny_high = 150.0;
    double canny_sigma = 1.4;
    int hough_threshold = 30;
    double hough_min_length = 40.0;
    double hough_max_gap = 10.0;
    double roi_fraction = 0.45;
    double min_slope_deg = 20.0;
    double max_slope_deg = 70.0;

    CannyParams canny() const { return {canny_low, canny_high, canny_sigma}; }
    HoughParams hough(std::uint64_t seed) const {
        HoughParams h;
        h.vote_thresh = hough_threshold;
        h.min_len = hough_min_length;
        h.max_gap = hough_max_gap;
        h.seed = seed;
        return h;
    }
};

struct EstimateOptions {
    std::string frames;
    std::string camera;
    std::string dims;              // empty: built-in table
    std::string gps;               // empty: use the frame records' positions
    std::string approach = "both";
    std::string calibration = "fixed";
    std::optional<double> pitch_deg;
    std::optional<double> height_m;
    std::string images_dir;        // empty: directory of the frames file
    int window = 3;
    unsigned jobs = 0;             // 0: hardware concurrency
    std::uint64_t seed = 42;
    VisionOptions vision;
    std::string out_dir = "out";
};

struct SimulateOptions {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::optional<double> gps_sigma_m;
    std::optional<double> pixel_jitter_px;
    std::optional<bool> quantize;
    std::optional<bool> render_images;
    std::string out_dir = "out";
};

struct EvaluateOptions {
    std::vector<std::string> estimates;
    std::string truth;
    std::string ego;               // optional ego trace for covariates
    double max_dt = 0.5;
    std::string match = "interpolate";
    std::string out_dir = "out";
};

struct ExportOptions {
    std::vector<std::string> inputs;
    std::string out_dir = "out";
    std::string name = "tracks.geojson";
};

struct VanishOptions {
    std::string image;
    std::string camera;            // optional, enables pitch output
    std::uint64_t seed = 42;
    VisionOptions vision;
    std::string out_dir = "out";
};

// ---------------------------------------------------------------------------
// Echo serialization

inline ordered_json to_json(const VisionOptions& v) {
    return {{"canny_low", v.canny_low},           {"canny_high", v.canny_high},
            {"canny_sigma", v.canny_sigma},       {"hough_threshold", v.hough_threshold},
            {"hough_min_length", v.hough_min_length}, {"hough_max_gap", v.hough_max_gap},
            {"roi_fraction", v.roi_fraction},     {"min_slope_deg", v.min_slope_deg},
            {"max_slope_deg", v.max_slope_deg}};
}

inline void from_json(const json& j, VisionOptions& v) {
    const std::string ctx = "config.vision";
    v.canny_low = io::get_or(j, "canny_low", v.canny_low, ctx);
    v.canny_high = io::get_or(j, "canny_high", v.canny_high, ctx);
    v.canny_sigma = io::get_or(j, "canny_sigma", v.canny_sigma, ctx);
    v.hough_threshold = io::get_or(j, "hough_threshold", v.hough_threshold, ctx);
    v.hough_min_length = io::get_or(j, "hough_min_length", v.hough_min_length, ctx);
    v.hough_max_gap = io::get_or(j, "hough_max_gap", v.hough_max_gap, ctx);
    v.roi_fraction = io::get_or(j, "roi_fraction", v.roi_fraction, ctx);
    v.min_slope_deg = io::get_or(j, "min_slope_deg", v.min_slope_deg, ctx);
    v.max_slope_deg = io::get_or(j, "max_slope_deg", v.max_slope_deg, ctx);
}

template <typename T>
ordered_json opt_json(const std::optional<T>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const json& j, const char* key, std::optional<T> fallback) {
    if (!j.contains(key)) return fallback;
    if (j.at(key).is_null()) return std::nullopt;
    return io::get_field<T>(j, key, "config");
}

inline ordered_json to_json(const EstimateOptions& o) {
    return {{"command", "estimate"},
            {"frames", o.frames},
            {"camera", o.camera},
            {"dims", o.dims},
            {"gps", o.gps},
            {"approach", o.approach},
            {"calibration", o.calibration},
            {"pitch_deg", opt_json(o.pitch_deg)},
            {"height_m", opt_json(o.height_m)},
            {"images_dir", o.images_dir},
            {"window", o.window},
            {"jobs", o.jobs},
            {"seed", o.seed},
            {"vision", to_json(o.vision)},
            {"out_dir", o.out_dir}};
}

inline void from_json(const json& j, EstimateOptions& o) {
    const std::string ctx = "config";
    o.frames = io::get_or(j, "frames", o.frames, ctx);
    o.camera = io::get_or(j, "camera", o.camera, ctx);
    o.dims = io::get_or(j, "dims", o.dims, ctx);
    o.gps = io::get_or(j, "gps", o.gps, ctx);
    o.approach = io::get_or(j, "approach", o.approach, ctx);
    o.calibration = io::get_or(j, "calibration", o.calibration, ctx);
    o.pitch_deg = opt_from(j, "pitch_deg", o.pitch_deg);
    o.height_m = opt_from(j, "height_m", o.height_m);
    o.images_dir = io::get_or(j, "images_dir", o.images_dir, ctx);
    o.window = io::get_or(j, "window", o.window, ctx);
    o.jobs = io::get_or(j, "jobs", o.jobs, ctx);
    o.seed = io::get_or(j, "seed", o.seed, ctx);
    if (j.contains("vision")) from_json(j.at("vision"), o.vision);
    o.out_dir = io::get_or(j, "out_dir", o.out_dir, ctx);
}

inline ordered_json to_json(const SimulateOptions& o) {
    return {{"command", "simulate"},
            {"scenario", o.scenario},
            {"seed", opt_json(o.seed)},
            {"gps_sigma_m", opt_json(o.gps_sigma_m)},
            {"pixel_jitter_px", opt_json(o.pixel_jitter_px)},
            {"quantize", opt_json(o.quantize)},
            {"render_images", opt_json(o.render_images)},
            {"out_dir", o.out_dir}};
}

inline void from_json(const json& j, SimulateOptions& o) {
    o.scenario = io::get_or(j, "scenario", o.scenario, "config");
    o.seed = opt_from(j, "seed", o.seed);
    o.gps_sigma_m = opt_from(j, "gps_sigma_m", o.gps_sigma_m);
    o.pixel_jitter_px = opt_from(j, "pixel_jitter_px", o.pixel_jitter_px);
    o.quantize = opt_from(j, "quantize", o.quantize);
    o.render_images = opt_from(j, "render_images", o.render_images);
    o.out_dir = io::get_or(j, "out_dir", o.out_dir, "config");
}

inline ordered_json to_json(const EvaluateOptions& o) {
    return {{"command", "evaluate"}, {"estimates", o.estimates}, {"truth", o.truth}, {"ego", o.ego},
            {"max_dt", o.max_dt},    {"match", o.match},         {"out_dir", o.out_dir}};
}

inline void from_json(const json& j, EvaluateOptions& o) {
    o.estimates = io::get_or(j, "estimates", o.estimates, "config");
    o.truth = io::get_or(j, "truth", o.truth, "config");
    o.ego = io::get_or(j, "ego", o.ego, "config");
    o.max_dt = io::get_or(j, "max_dt", o.max_dt, "config");
    o.match = io::get_or(j, "match", o.match, "config");
    o.out_dir = io::get_or(j, "out_dir", o.out_dir, "config");
}

inline ordered_json to_json(const ExportOptions& o) {
    return {{"command", "export"}, {"inputs", o.inputs}, {"out_dir", o.out_dir}, {"name", o.name}};
}

inline void from_json(const json& j, ExportOptions& o) {
    o.inputs = io::get_or(j, "inputs", o.inputs, "config");
    o.out_dir = io::get_or(j, "out_dir", o.out_dir, "config");
    o.name = io::get_or(j, "name", o.name, "config");
}

inline ordered_json to_json(const VanishOptions& o) {
    return {{"command", "vanish"}, {"image", o.image}, {"camera", o.camera}, {"seed", o.seed},
            {"vision", to_json(o.vision)}, {"out_dir", o.out_dir}};
}

inline void from_json(const json& j, VanishOptions& o) {
    o.image = io::get_or(j, "image", o.image, "config");
    o.camera = io::get_or(j, "camera", o.camera, "config");
    o.seed = io::get_or(j, "seed", o.seed, "config");
    if (j.contains("vision")) from_json(j.at("vision"), o.vision);
    o.out_dir = io::get_or(j, "out_dir", o.out_dir, "config");
}

// ---------------------------------------------------------------------------
// Helpers

namespace detail {

inline std::string out_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

inline void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw Error(ErrorCode::ParseError, what + " path is required");
    if (!std::filesystem::is_regular_file(path)) throw Error(ErrorCode::ParseError, what + " '" + path + "' not found");
}

// Files are staged in memory and only written once every computation has
// succeeded.
struct Outputs {
    std::vector<std::pair<std::string, std::string>> files;
    void add(std::string path, std::string content) { files.emplace_back(std::move(path), std::move(content)); }
    void commit() const {
        for (const auto& [path, content] : files) io::write_atomic(path, content);
    }
};

inline std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

template <typename F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error [io]: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}

inline std::vector<Approach> parse_approaches(const std::string& s) {
    if (s == "image") return {Approach::Image};
    if (s == "geometric") return {Approach::Geometric};
    if (s == "both") return {Approach::Image, Approach::Geometric};
    throw Error(ErrorCode::ParseError, "approach must be image|geometric|both, got '" + s + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands

inline int cmd_estimate(EstimateOptions o, std::ostream& err = std::cerr) {
    return detail::guarded(err, [&]() -> int {
        if (o.jobs == 0) o.jobs = std::max(1u, std::thread::hardware_concurrency());
        const auto approaches = detail::parse_approaches(o.approach);
        const bool uses_geometry = std::find(approaches.begin(), approaches.end(), Approach::Geometric) != approaches.end();
        if (o.calibration != "fixed" && o.calibration != "auto") {
            throw Error(ErrorCode::ParseError, "calibration must be fixed|auto, got '" + o.calibration + "'");
        }
        if (o.window < 1) throw Error(ErrorCode::ParseError, "window must be >= 1");

        // Fail fast: every referenced file must exist and parse.
        detail::require_file(o.frames, "frames");
        detail::require_file(o.camera, "camera");
        if (!o.dims.empty()) detail::require_file(o.dims, "dims");
        if (!o.gps.empty()) detail::require_file(o.gps, "gps");
        const io::CameraConfig cam = io::camera_from_json(io::read_json_file(o.camera), o.camera);
        const DimsTable dims = o.dims.empty() ? default_dims_table() : io::dims_from_json(io::read_json_file(o.dims), o.dims);
        const auto frames = io::read_frames(o.frames);
        std::optional<std::vector<TimedPoint>> gps;
        if (!o.gps.empty()) gps = io::timed_points(io::read_trace(o.gps));

        PipelineConfig cfg;
        cfg.approaches = approaches;
        cfg.smoothing_window = o.window;
        cfg.jobs = o.jobs;
        cfg.calibration = o.calibration == "auto" ? CalibrationMode::Auto : CalibrationMode::Fixed;
        if (cfg.calibration == CalibrationMode::Fixed && uses_geometry) {
            const std::optional<double> pitch = o.pitch_deg ? std::optional(deg2rad(*o.pitch_deg)) : cam.pitch_rad;
            const std::optional<double> height = o.height_m ? o.height_m : cam.height_m;
            if (!pitch || !height) {
                throw Error(ErrorCode::ParseError, "fixed calibration needs pitch and mounting height");
            }
            if (!(*height > 0.0)) throw Error(ErrorCode::ParseError, "mounting height must be positive");
            cfg.fixed_extrinsics = {*pitch, *height};
        }
        cfg.roi_fraction = o.vision.roi_fraction;
        cfg.min_slope_deg = o.vision.min_slope_deg;
        cfg.max_slope_deg = o.vision.max_slope_deg;
        cfg.canny = o.vision.canny();
        cfg.hough = o.vision.hough(o.seed);
        cfg.image_dir = !o.images_dir.empty() ? o.images_dir : std::filesystem::path(o.frames).parent_path().string();

        const PipelineResult res = run_pipeline(frames, cam.intrinsics, dims, cfg, gps ? &*gps : nullptr);

        detail::Outputs out;
        for (const Approach a : approaches) {
            std::vector<ordered_json> rows;
            for (const auto& e : res.estimates) {
                if (e.approach == a) rows.push_back(io::estimate_to_json(e));
            }
            out.add(detail::out_path(o.out_dir, std::string("estimates_") + to_string(a) + ".jsonl"), io::jsonl(rows));
        }

        ordered_json log;
        log["frames"] = frames.size();
        std::size_t detections = 0;
        for (const auto& f : frames) detections += f.detections.size();
        log["detections"] = detections;
        ordered_json per = ordered_json::object();
        for (const Approach a : approaches) {
            std::size_t n = 0, s = 0;
            for (const auto& e : res.estimates) n += e.approach == a;
            for (const auto& k : res.skipped) s += k.approach == a;
            per[to_string(a)] = {{"estimates", n}, {"skipped", s}};
        }
        log["approaches"] = per;
        log["skipped_total"] = res.skipped.size();
        ordered_json skipped = ordered_json::array();
        for (const auto& s : res.skipped) {
            skipped.push_back({{"t", s.t},
                               {"target_id", s.target_id},
                               {"approach", to_string(s.approach)},
                               {"code", to_string(s.code)},
                               {"reason", s.reason}});
        }
        log["skipped"] = skipped;
        if (res.final_extrinsics) {
            log["extrinsics"] = {{"pitch_deg", rad2deg(res.final_extrinsics->pitch_rad)},
                                 {"mount_height_m", res.final_extrinsics->height_m},
                                 {"mode", o.calibration},
                                 {"frozen", res.calibration_frozen}};
        }
        out.add(detail::out_path(o.out_dir, "run_log.json"), detail::dump(log));

        if (cfg.calibration == CalibrationMode::Auto) {
            ordered_json cal = ordered_json::array();
            for (const auto& s : res.calibration) {
                ordered_json row;
                row["t"] = s.t;
                row["pitch_deg"] = s.pitch_rad ? ordered_json(rad2deg(*s.pitch_rad)) : ordered_json(nullptr);
                row["height_m"] = opt_json(s.height_m);
                row["dispersion_px"] = s.dispersion_px;
                row["used_pitch_deg"] = s.used ? ordered_json(rad2deg(s.used->pitch_rad)) : ordered_json(nullptr);
                row["used_height_m"] = s.used ? ordered_json(s.used->height_m) : ordered_json(nullptr);
                row["frozen"] = s.frozen;
                row["note"] = s.note;
                cal.push_back(row);
            }
            out.add(detail::out_path(o.out_dir, "calibration.json"), detail::dump({{"samples", cal}}));
        }
        out.add(detail::out_path(o.out_dir, "config_echo.json"), detail::dump(to_json(o)));
        out.commit();
        if (!res.skipped.empty()) err << "warning: " << res.skipped.size() << " detection(s) skipped, see run_log.json\n";
        return kOk;
    });
}

inline int cmd_simulate(SimulateOptions o, std::ostream& err = std::cerr) {
    return detail::guarded(err, [&]() -> int {
        detail::require_file(o.scenario, "scenario");
        Scenario sc;
        try {
            sc = io::scenario_from_json(io::read_json_file(o.scenario), o.scenario);
        } catch (const Error& e) {
            throw Error(ErrorCode::InvalidScenario, e.what());
        }
        if (!o.seed) o.seed = sc.seed;
        if (!o.gps_sigma_m) o.gps_sigma_m = sc.noise.gps_sigma_m;
        if (!o.pixel_jitter_px) o.pixel_jitter_px = sc.noise.pixel_jitter_px;
        if (!o.quantize) o.quantize = sc.noise.quantize;
        if (!o.render_images) o.render_images = sc.render_images;
        sc.seed = *o.seed;
        sc.noise = {*o.gps_sigma_m, *o.pixel_jitter_px, *o.quantize};
        sc.render_images = *o.render_images;
        try {
            validate(sc);
        } catch (const Error& e) {
            throw Error(ErrorCode::InvalidScenario, e.what());
        }

        const GeneratedScene scene = generate(sc);
        detail::Outputs out;
        std::vector<ordered_json> rows;
        for (const auto& f : scene.frames) {
            ordered_json j = io::frame_to_json(f);
            if (f.image_ref) j["image"] = "images/" + *f.image_ref;
            rows.push_back(j);
        }
        out.add(detail::out_path(o.out_dir, "frames.jsonl"), io::jsonl(rows));
        rows.clear();
        for (const auto& s : scene.truth.targets) rows.push_back(io::truth_to_json(s));
        out.add(detail::out_path(o.out_dir, "truth.jsonl"), io::jsonl(rows));
        rows.clear();
        for (const auto& p : scene.truth.ego) rows.push_back(io::point_to_json(p));
        out.add(detail::out_path(o.out_dir, "ego_truth.jsonl"), io::jsonl(rows));
        out.add(detail::out_path(o.out_dir, "camera.json"), detail::dump(io::camera_to_json(sc.camera, sc.extrinsics)));
        DimsTable dims;
        for (const auto& t : sc.targets) dims[t.class_label] = t.dims;
        out.add(detail::out_path(o.out_dir, "dims.json"), detail::dump(io::dims_to_json(dims)));
        out.add(detail::out_path(o.out_dir, "scenario.json"), detail::dump(io::scenario_to_json(sc)));
        for (const auto& [name, img] : scene.images) {
            out.add(detail::out_path(o.out_dir, "images/" + name), encode_pgm(img));
        }
        out.add(detail::out_path(o.out_dir, "config_echo.json"), detail::dump(to_json(o)));
        out.commit();
        return kOk;
    });
}

inline int cmd_evaluate(EvaluateOptions o, std::ostream& err = std::cerr) {
    return detail::guarded(err, [&]() -> int {
        if (o.estimates.empty()) throw Error(ErrorCode::ParseError, "at least one estimates file is required");
        MatchMode mode;
        if (o.match == "interpolate") mode = MatchMode::Interpolate;
        else if (o.match == "nearest") mode = MatchMode::Nearest;
        else throw Error(ErrorCode::ParseError, "match must be interpolate|nearest");
        if (!(o.max_dt >= 0.0)) throw Error(ErrorCode::ParseError, "max_dt must be non-negative");
        for (const auto& p : o.estimates) detail::require_file(p, "estimates");
        detail::require_file(o.truth, "truth");
        if (!o.ego.empty()) detail::require_file(o.ego, "ego");

        std::vector<io::TraceRow> est;
        for (const auto& p : o.estimates) {
            auto rows = io::read_trace(p);
            est.insert(est.end(), rows.begin(), rows.end());
        }
        const auto truth_rows = io::read_trace(o.truth);
        std::optional<std::vector<TimedPoint>> ego;
        if (!o.ego.empty()) ego = io::timed_points(io::read_trace(o.ego));

        std::map<std::string, std::vector<TimedPoint>> truth;
        for (const auto& r : truth_rows) truth[r.target_id].push_back({r.t, r.p});
        for (auto& [id, tr] : truth) {
            std::stable_sort(tr.begin(), tr.end(), [](const TimedPoint& a, const TimedPoint& b) { return a.t < b.t; });
        }
        std::map<std::pair<std::string, std::string>, std::vector<TimedPoint>> groups;
        for (const auto& r : est) groups[{r.target_id, r.approach}].push_back({r.t, r.p});

        EvalReport report;
        bool any = false;
        for (auto& [key, pts] : groups) {
            std::stable_sort(pts.begin(), pts.end(), [](const TimedPoint& a, const TimedPoint& b) { return a.t < b.t; });
            ReportCell cell;
            cell.target_id = key.first;
            cell.approach = key.second;
            const auto it = truth.find(key.first);
            if (it == truth.end()) {
                for (const auto& p : pts) cell.unmatched.push_back(p.t);
                report.cells.push_back(std::move(cell));
                continue;
            }
            try {
                const MatchResult m = match_frames(pts, it->second, o.max_dt, mode);
                cell.stats = deviation_stats(m.pairs);
                cell.unmatched = m.unmatched;
                if (ego) cell.covariates = covariates(*ego, it->second, m.pairs);
                any = true;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::EmptyIntersection) throw;
                for (const auto& p : pts) cell.unmatched.push_back(p.t);
            }
            report.cells.push_back(std::move(cell));
        }
        if (!any) throw Error(ErrorCode::EmptyIntersection, "no estimate falls within the truth time span");

        detail::Outputs out;
        out.add(detail::out_path(o.out_dir, "report.json"), detail::dump(io::report_to_json(report)));
        out.add(detail::out_path(o.out_dir, "report.txt"), io::report_table(report));
        out.add(detail::out_path(o.out_dir, "deviations.csv"), io::deviations_csv(report));
        out.add(detail::out_path(o.out_dir, "config_echo.json"), detail::dump(to_json(o)));
        out.commit();
        return kOk;
    });
}

inline int cmd_export(ExportOptions o, std::ostream& err = std::cerr) {
    return detail::guarded(err, [&]() -> int {
        if (o.inputs.empty()) throw Error(ErrorCode::ParseError, "at least one input trace is required");
        std::vector<io::TraceRow> rows;
        for (const auto& p : o.inputs) {
            detail::require_file(p, "input");
            auto r = io::read_trace(p);
            rows.insert(rows.end(), r.begin(), r.end());
        }
        if (rows.empty()) throw Error(ErrorCode::ParseError, "input traces are empty");
        detail::Outputs out;
        out.add(detail::out_path(o.out_dir, o.name), detail::dump(io::to_geojson(rows)));
        out.add(detail::out_path(o.out_dir, "config_echo.json"), detail::dump(to_json(o)));
        out.commit();
        return kOk;
    });
}

inline int cmd_vanish(VanishOptions o, std::ostream& err = std::cerr) {
    return detail::guarded(err, [&]() -> int {
        detail::require_file(o.image, "image");
        std::optional<io::CameraConfig> cam;
        if (!o.camera.empty()) {
            detail::require_file(o.camera, "camera");
            cam = io::camera_from_json(io::read_json_file(o.camera), o.camera);
        }
        const GrayImage img = read_pgm_file(o.image);
        if (cam && (cam->intrinsics.n_h != img.width || cam->intrinsics.n_v != img.height)) {
            throw Error(ErrorCode::ParseError, "image size does not match the camera resolution");
        }
        LaneFilter filter = LaneFilter::lower_fraction(img.height, o.vision.roi_fraction);
        filter.min_abs_slope = deg2rad(o.vision.min_slope_deg);
        filter.max_abs_slope = deg2rad(o.vision.max_slope_deg);
        const GrayImage edges = canny_edges(img, o.vision.canny());
        const auto segments = ppht_segments(edges, o.vision.hough(o.seed));
        const auto lanes = lane_candidates(segments, filter);
        const VanishingPoint vp = vanishing_point(segments, filter);

        ordered_json j;
        ordered_json segs = ordered_json::array();
        for (const auto& s : segments) segs.push_back({s.a.u, s.a.v, s.b.u, s.b.v});
        ordered_json lane_json = ordered_json::array();
        for (const auto& s : lanes) lane_json.push_back({s.a.u, s.a.v, s.b.u, s.b.v});
        j["segments"] = segs;
        j["lane_candidates"] = lane_json;
        j["vanishing_point"] = {{"u", vp.j.u}, {"v", vp.j.v}, {"support", vp.support_count}, {"dispersion_px", vp.dispersion_px}};
        if (cam) j["pitch_deg"] = rad2deg(pitch_from_vp(vp, cam->intrinsics));
        detail::Outputs out;
        out.add(detail::out_path(o.out_dir, "vanish.json"), detail::dump(j));
        out.add(detail::out_path(o.out_dir, "config_echo.json"), detail::dump(to_json(o)));
        out.commit();
        return kOk;
    });
}

// ---------------------------------------------------------------------------
// Argument parsing

namespace detail {

inline void bind_vision(CLI::App* app, VisionOptions& v) {
    app->add_option("--canny-low", v.canny_low, "Canny low threshold")->capture_default_str();
    app->add_option("--canny-high", v.canny_high, "Canny high threshold")->capture_default_str();
    app->add_option("--canny-sigma", v.canny_sigma, "Gaussian sigma before Canny")->capture_default_str();
    app->add_option("--hough-threshold", v.hough_threshold, "PPHT vote threshold")->capture_default_str();
    app->add_option("--hough-min-length", v.hough_min_length, "PPHT minimum segment length (px)")->capture_default_str();
    app->add_option("--hough-max-gap", v.hough_max_gap, "PPHT maximum gap (px)")->capture_default_str();
    app->add_option("--roi-fraction", v.roi_fraction, "lower image fraction searched for lanes")->capture_default_str();
    app->add_option("--min-slope-deg", v.min_slope_deg, "minimum |slope| of lane candidates")->capture_default_str();
    app->add_option("--max-slope-deg", v.max_slope_deg, "maximum |slope| of lane candidates")->capture_default_str();
}

// Returns the value following `--config` (or `--config=...`), if present.
inline std::optional<std::string> find_config(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
    }
    return std::nullopt;
}

template <typename Options>
void load_config(const std::optional<std::string>& path, const std::string& command, Options& o) {
    if (!path) return;
    const json j = io::read_json_file(*path);
    if (io::get_or<std::string>(j, "command", command, *path) != command) {
        throw Error(ErrorCode::ParseError, "config '" + *path + "' belongs to another subcommand");
    }
    from_json(j, o);
}

}  // namespace detail

/// Parses `args` (without the program name) and runs the subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Monocular-camera geolocation of target vehicles", "geoloc"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "geoloc 1.0.0");

    EstimateOptions est;
    SimulateOptions sim;
    EvaluateOptions eva;
    ExportOptions exp;
    VanishOptions van;

    const std::string command = args.empty() ? std::string() : args.front();
    const auto config = detail::find_config(args);
    try {
        if (command == "estimate") detail::load_config(config, command, est);
        if (command == "simulate") detail::load_config(config, command, sim);
        if (command == "evaluate") detail::load_config(config, command, eva);
        if (command == "export") detail::load_config(config, command, exp);
        if (command == "vanish") detail::load_config(config, command, van);
    } catch (const Error& e) {
        err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return kConfig;
    }

    std::string unused_config;
    auto* e = app.add_subcommand("estimate", "estimate target geolocations from frame records");
    e->add_option("--config", unused_config, "re-run from a config echo; explicit flags override it");
    e->add_option("--frames", est.frames, "frame records (JSON lines)");
    e->add_option("--camera", est.camera, "camera config (JSON)");
    e->add_option("--dims", est.dims, "vehicle dimension table (JSON); built-in table when omitted");
    e->add_option("--gps", est.gps, "raw ego GPS trace (JSON lines); frame positions when omitted");
    e->add_option("--approach", est.approach, "image|geometric|both")->capture_default_str();
    e->add_option("--calibration", est.calibration, "fixed|auto")->capture_default_str();
    e->add_option("--pitch-deg", est.pitch_deg, "fixed pitch, overrides the camera config");
    e->add_option("--height-m", est.height_m, "fixed mounting height, overrides the camera config");
    e->add_option("--images-dir", est.images_dir, "directory for relative image references");
    e->add_option("--window", est.window, "GPS moving-average window")->capture_default_str();
    e->add_option("--jobs", est.jobs, "worker threads; 0 = all cores")->capture_default_str();
    e->add_option("--seed", est.seed, "run seed")->capture_default_str();
    e->add_option("--out-dir", est.out_dir, "output directory")->capture_default_str();
    detail::bind_vision(e, est.vision);

    auto* s = app.add_subcommand("simulate", "generate a synthetic scene");
    s->add_option("--config", unused_config, "re-run from a config echo; explicit flags override it");
    s->add_option("--scenario", sim.scenario, "scenario (JSON)");
    s->add_option("--seed", sim.seed, "noise seed (scenario value when omitted)");
    s->add_option("--gps-sigma", sim.gps_sigma_m, "GPS noise, 2-D RMS meters");
    s->add_option("--jitter", sim.pixel_jitter_px, "uniform bounding-box edge jitter (px)");
    s->add_option("--quantize", sim.quantize, "round boxes to integer pixels");
    s->add_option("--render-images", sim.render_images, "write lane PGM images");
    s->add_option("--out-dir", sim.out_dir, "output directory")->capture_default_str();

    auto* v = app.add_subcommand("evaluate", "compare estimates with ground truth");
    v->add_option("--config", unused_config, "re-run from a config echo; explicit flags override it");
    v->add_option("--estimates", eva.estimates, "estimate files (JSON lines)");
    v->add_option("--truth", eva.truth, "truth trace (JSON lines)");
    v->add_option("--ego", eva.ego, "ego truth trace for speed/distance covariates");
    v->add_option("--max-dt", eva.max_dt, "largest time gap for a match (s)")->capture_default_str();
    v->add_option("--match", eva.match, "interpolate|nearest")->capture_default_str();
    v->add_option("--out-dir", eva.out_dir, "output directory")->capture_default_str();

    auto* x = app.add_subcommand("export", "write GeoJSON tracks");
    x->add_option("--config", unused_config, "re-run from a config echo; explicit flags override it");
    x->add_option("--input", exp.inputs, "estimate or truth traces (JSON lines)");
    x->add_option("--out-dir", exp.out_dir, "output directory")->capture_default_str();
    x->add_option("--name", exp.name, "output file name")->capture_default_str();

    auto* n = app.add_subcommand("vanish", "vanishing point of a PGM road image");
    n->add_option("--config", unused_config, "re-run from a config echo; explicit flags override it");
    n->add_option("--image", van.image, "8-bit PGM image");
    n->add_option("--camera", van.camera, "camera config (JSON) for pitch output");
    n->add_option("--seed", van.seed, "PPHT seed")->capture_default_str();
    n->add_option("--out-dir", van.out_dir, "output directory")->capture_default_str();
    detail::bind_vision(n, van.vision);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::Success& ok) {
        return app.exit(ok, out, err);
    } catch (const CLI::ParseError& pe) {
        app.exit(pe, out, err);
        return kConfig;
    }

    if (e->parsed()) return cmd_estimate(est, err);
    if (s->parsed()) return cmd_simulate(sim, err);
    if (v->parsed()) return cmd_evaluate(eva, err);
    if (x->parsed()) return cmd_export(exp, err);
    if (n->parsed()) return cmd_vanish(van, err);
    return kConfig;
}

}  // namespace geoloc::cli
