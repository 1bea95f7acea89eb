#pragma once

// File formats. Configuration documents are JSON; traces, frame records,
// truth and estimates are JSON-lines (one object per line). Angles are
// degrees in files and radians in memory.

#include <geoloc/error.hpp>
#include <geoloc/evaluation.hpp>
#include <geoloc/extrinsics.hpp>
#include <geoloc/pipeline.hpp>
#include <geoloc/simulator.hpp>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace geoloc::io {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Plumbing

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, what + ": " + e.what());
    }
}

inline json read_json_file(const std::string& path) { return parse_json(read_text(path), path); }

inline std::vector<json> read_jsonl_file(const std::string& path) {
    std::istringstream in(read_text(path));
    std::vector<json> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(parse_json(line, path + ":" + std::to_string(lineno)));
    }
    return out;
}

/// Writes through a temporary file and renames, so readers never observe a
/// partially written output.
inline void write_atomic(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::ParseError, "cannot write '" + tmp + "'");
        out << content;
        if (!out) throw Error(ErrorCode::ParseError, "write failed for '" + tmp + "'");
    }
    std::filesystem::rename(tmp, p);
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& ctx) {
    if (!j.is_object() || !j.contains(key)) {
        throw Error(ErrorCode::ParseError, ctx + ": missing field '" + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, ctx + ": field '" + key + "': " + e.what());
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& ctx) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
    return get_field<T>(j, key, ctx);
}

inline std::string jsonl(const std::vector<ordered_json>& rows) {
    std::string out;
    for (const auto& r : rows) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Camera config

struct CameraConfig {
    CameraIntrinsics intrinsics;
    std::optional<double> pitch_rad;
    std::optional<double> height_m;

    std::optional<CameraExtrinsics> fixed_extrinsics() const {
        if (pitch_rad && height_m) return CameraExtrinsics{*pitch_rad, *height_m};
        return std::nullopt;
    }
};

inline CameraConfig camera_from_json(const json& j, const std::string& ctx = "camera") {
    CameraConfig c;
    std::optional<PixelPoint> principal;
    if (j.contains("principal") && !j.at("principal").is_null()) {
        const auto pp = get_field<std::vector<double>>(j, "principal", ctx);
        if (pp.size() != 2) throw Error(ErrorCode::ParseError, ctx + ": principal must be [u, v]");
        principal = PixelPoint{pp[0], pp[1]};
    }
    try {
        c.intrinsics = intrinsics_from_fov(get_field<int>(j, "n_h", ctx), get_field<int>(j, "n_v", ctx),
                                           deg2rad(get_field<double>(j, "fov_h_deg", ctx)), principal);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ParseError) throw;
        throw Error(ErrorCode::ParseError, ctx + ": " + e.what());
    }
    if (j.contains("pitch_deg") && !j.at("pitch_deg").is_null()) c.pitch_rad = deg2rad(get_field<double>(j, "pitch_deg", ctx));
    if (j.contains("mount_height_m") && !j.at("mount_height_m").is_null()) {
        c.height_m = get_field<double>(j, "mount_height_m", ctx);
        if (!(*c.height_m > 0.0)) throw Error(ErrorCode::ParseError, ctx + ": mount_height_m must be positive");
    }
    return c;
}

inline ordered_json camera_to_json(const CameraIntrinsics& k, std::optional<CameraExtrinsics> ext = std::nullopt) {
    ordered_json j;
    j["n_h"] = k.n_h;
    j["n_v"] = k.n_v;
    j["fov_h_deg"] = rad2deg(k.fov_h);
    j["principal"] = {k.principal.u, k.principal.v};
    if (ext) {
        j["pitch_deg"] = rad2deg(ext->pitch_rad);
        j["mount_height_m"] = ext->height_m;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Dimension table

inline DimsTable dims_from_json(const json& j, const std::string& ctx = "dims") {
    if (!j.is_object()) throw Error(ErrorCode::ParseError, ctx + ": expected an object of class -> dims");
    DimsTable t;
    for (const auto& [label, v] : j.items()) {
        VehicleDims d{get_field<double>(v, "width_m", ctx + "." + label), get_field<double>(v, "height_m", ctx + "." + label)};
        if (!(d.width_m > 0.0 && d.height_m > 0.0)) {
            throw Error(ErrorCode::ParseError, ctx + "." + label + ": dimensions must be positive");
        }
        t[label] = d;
    }
    return t;
}

inline ordered_json dims_to_json(const DimsTable& t) {
    ordered_json j = ordered_json::object();
    for (const auto& [label, d] : t) j[label] = {{"width_m", d.width_m}, {"height_m", d.height_m}};
    return j;
}

// ---------------------------------------------------------------------------
// Frame records

inline GeoPoint geopoint_from_json(const json& j, const std::string& ctx) {
    const double lat = get_field<double>(j, "lat", ctx);
    const double lon = get_field<double>(j, "lon", ctx);
    try {
        return make_geopoint(lat, lon);
    } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, ctx + ": " + e.what());
    }
}

inline LineSegment segment_from_json(const json& j, const std::string& ctx) {
    std::vector<double> v;
    try {
        v = j.get<std::vector<double>>();
    } catch (const json::exception&) {
    }
    if (v.size() != 4) throw Error(ErrorCode::ParseError, ctx + ": segment must be [u1, v1, u2, v2]");
    return {{v[0], v[1]}, {v[2], v[3]}};
}

inline FrameRecord frame_from_json(const json& j, const std::string& ctx) {
    FrameRecord f;
    f.t = get_field<double>(j, "t", ctx);
    f.ego = geopoint_from_json(j, ctx);
    if (j.contains("detections")) {
        for (const auto& d : j.at("detections")) {
            TargetDetection td;
            td.target_id = get_field<std::string>(d, "target_id", ctx);
            td.det.class_label = get_or<std::string>(d, "class", "car", ctx);
            const auto b = get_field<std::vector<double>>(d, "bbox", ctx);
            if (b.size() != 4) throw Error(ErrorCode::ParseError, ctx + ": bbox must be [u_min, v_min, u_max, v_max]");
            td.det.bbox = {b[0], b[1], b[2], b[3]};
            f.detections.push_back(std::move(td));
        }
    }
    if (j.contains("image") && !j.at("image").is_null()) f.image_ref = get_field<std::string>(j, "image", ctx);
    if (j.contains("vanishing_point") && !j.at("vanishing_point").is_null()) {
        const json& v = j.at("vanishing_point");
        VanishingPoint vp;
        vp.j = {get_field<double>(v, "u", ctx), get_field<double>(v, "v", ctx)};
        vp.support_count = get_or<int>(v, "support", 1, ctx);
        vp.dispersion_px = get_or<double>(v, "dispersion_px", 0.0, ctx);
        f.vanishing_override = vp;
    }
    if (j.contains("segments") && !j.at("segments").is_null()) {
        std::vector<LineSegment> segs;
        for (const auto& s : j.at("segments")) segs.push_back(segment_from_json(s, ctx));
        f.segments_override = std::move(segs);
    }
    return f;
}

inline ordered_json frame_to_json(const FrameRecord& f) {
    ordered_json j;
    j["t"] = f.t;
    j["lat"] = f.ego.lat;
    j["lon"] = f.ego.lon;
    ordered_json dets = ordered_json::array();
    for (const auto& td : f.detections) {
        const auto& b = td.det.bbox;
        dets.push_back({{"target_id", td.target_id}, {"class", td.det.class_label}, {"bbox", {b.u_min, b.v_min, b.u_max, b.v_max}}});
    }
    j["detections"] = dets;
    if (f.image_ref) j["image"] = *f.image_ref;
    if (f.vanishing_override) {
        j["vanishing_point"] = {{"u", f.vanishing_override->j.u},
                                {"v", f.vanishing_override->j.v},
                                {"support", f.vanishing_override->support_count},
                                {"dispersion_px", f.vanishing_override->dispersion_px}};
    }
    if (f.segments_override) {
        ordered_json segs = ordered_json::array();
        for (const auto& s : *f.segments_override) segs.push_back({s.a.u, s.a.v, s.b.u, s.b.v});
        j["segments"] = segs;
    }
    return j;
}

inline std::vector<FrameRecord> read_frames(const std::string& path) {
    std::vector<FrameRecord> out;
    const auto rows = read_jsonl_file(path);
    for (std::size_t i = 0; i < rows.size(); ++i) out.push_back(frame_from_json(rows[i], path + ":" + std::to_string(i + 1)));
    return out;
}

// ---------------------------------------------------------------------------
// Traces: GPS, truth and estimates

struct TraceRow {
    double t = 0.0;
    std::string target_id;
    std::string approach;  // empty for truth / raw GPS
    GeoPoint p;
    json extra;            // d_m, alpha_deg, ...
};

inline std::vector<TraceRow> read_trace(const std::string& path) {
    std::vector<TraceRow> out;
    const auto rows = read_jsonl_file(path);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string ctx = path + ":" + std::to_string(i + 1);
        TraceRow r;
        r.t = get_field<double>(rows[i], "t", ctx);
        r.p = geopoint_from_json(rows[i], ctx);
        r.target_id = get_or<std::string>(rows[i], "target_id", "", ctx);
        r.approach = get_or<std::string>(rows[i], "approach", "", ctx);
        r.extra = rows[i];
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<TimedPoint> timed_points(const std::vector<TraceRow>& rows) {
    std::vector<TimedPoint> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back({r.t, r.p});
    return out;
}

inline ordered_json estimate_to_json(const TargetEstimate& e) {
    ordered_json j;
    j["t"] = e.t;
    j["target_id"] = e.target_id;
    j["approach"] = to_string(e.approach);
    j["d_m"] = e.d_m;
    j["theta_deg"] = rad2deg(e.theta_rad);
    j["alpha_deg"] = rad2deg(e.alpha_rad);
    j["side"] = to_string(e.side);
    j["lat"] = e.position.lat;
    j["lon"] = e.position.lon;
    return j;
}

inline ordered_json truth_to_json(const TruthSample& s) {
    ordered_json j;
    j["t"] = s.t;
    j["target_id"] = s.target_id;
    j["lat"] = s.position.lat;
    j["lon"] = s.position.lon;
    j["d_m"] = s.d_m;
    j["theta_deg"] = rad2deg(s.theta_rad);
    j["alpha_deg"] = rad2deg(s.alpha_rad);
    j["speed_kmh"] = s.speed_mps * 3.6;
    j["visible"] = s.visible;
    return j;
}

inline ordered_json point_to_json(const TimedPoint& p) {
    ordered_json j;
    j["t"] = p.t;
    j["lat"] = p.p.lat;
    j["lon"] = p.p.lon;
    return j;
}

// ---------------------------------------------------------------------------
// Scenario

namespace detail {

inline SpeedProfile speed_from_json(const json& j, const std::string& ctx) {
    if (j.contains("speed_profile_kmh")) {
        SpeedProfile p;
        for (const auto& k : j.at("speed_profile_kmh")) {
            const auto v = k.get<std::vector<double>>();
            if (v.size() != 2) throw Error(ErrorCode::InvalidScenario, ctx + ": speed knots are [t, kmh]");
            p.knots.emplace_back(v[0], v[1] / 3.6);
        }
        return p;
    }
    return SpeedProfile::constant(get_field<double>(j, "speed_kmh", ctx) / 3.6);
}

inline ActorSpec actor_from_json(const json& j, const std::string& ctx) {
    ActorSpec a;
    a.id = get_or<std::string>(j, "id", "ego", ctx);
    a.class_label = get_or<std::string>(j, "class", "car", ctx);
    a.dims = {get_or<double>(j, "width_m", 1.8, ctx), get_or<double>(j, "height_m", 1.5, ctx)};
    a.start_s_m = get_or<double>(j, "start_m", 0.0, ctx);
    a.lateral_m = get_or<double>(j, "lateral_m", 0.0, ctx);
    a.speed = speed_from_json(j, ctx);
    const std::string dir = get_or<std::string>(j, "direction", "same", ctx);
    if (dir != "same" && dir != "opposite") throw Error(ErrorCode::InvalidScenario, ctx + ": direction must be same|opposite");
    a.opposite = dir == "opposite";
    return a;
}

inline ordered_json actor_to_json(const ActorSpec& a, bool with_identity) {
    ordered_json j;
    if (with_identity) {
        j["id"] = a.id;
        j["class"] = a.class_label;
        j["width_m"] = a.dims.width_m;
        j["height_m"] = a.dims.height_m;
    }
    j["start_m"] = a.start_s_m;
    j["lateral_m"] = a.lateral_m;
    ordered_json knots = ordered_json::array();
    for (const auto& [t, v] : a.speed.knots) knots.push_back({t, v * 3.6});
    j["speed_profile_kmh"] = knots;
    if (with_identity) j["direction"] = a.opposite ? "opposite" : "same";
    return j;
}

}  // namespace detail

/// Scenario document. Any malformed or missing field raises InvalidScenario.
inline Scenario scenario_from_json(const json& j, const std::string& ctx = "scenario") {
    try {
        Scenario sc;
        sc.name = get_or<std::string>(j, "name", "scenario", ctx);
        if (j.contains("origin")) sc.origin = geopoint_from_json(j.at("origin"), ctx + ".origin");
        sc.road_heading_rad = deg2rad(get_or<double>(j, "road_heading_deg", 0.0, ctx));
        sc.duration_s = get_field<double>(j, "duration_s", ctx);
        sc.fps = get_or<double>(j, "fps", 1.0, ctx);
        const json cam = get_field<json>(j, "camera", ctx);
        const CameraConfig cc = camera_from_json(cam, ctx + ".camera");
        sc.camera = cc.intrinsics;
        sc.extrinsics = {cc.pitch_rad.value_or(0.0), cc.height_m.value_or(1.4)};
        sc.ego = detail::actor_from_json(get_field<json>(j, "ego", ctx), ctx + ".ego");
        sc.targets.clear();
        for (const auto& t : get_field<json>(j, "targets", ctx)) sc.targets.push_back(detail::actor_from_json(t, ctx + ".targets"));
        sc.lane_lines_m = get_or<std::vector<double>>(j, "lane_lines_m", sc.lane_lines_m, ctx);
        sc.max_range_m = get_or<double>(j, "max_range_m", sc.max_range_m, ctx);
        sc.lane_near_m = get_or<double>(j, "lane_near_m", sc.lane_near_m, ctx);
        sc.lane_far_m = get_or<double>(j, "lane_far_m", sc.lane_far_m, ctx);
        if (j.contains("noise")) {
            const json& n = j.at("noise");
            sc.noise.gps_sigma_m = get_or<double>(n, "gps_sigma_m", 0.0, ctx);
            sc.noise.pixel_jitter_px = get_or<double>(n, "pixel_jitter_px", 0.0, ctx);
            sc.noise.quantize = get_or<bool>(n, "quantize", false, ctx);
        }
        sc.emit_segments = get_or<bool>(j, "emit_segments", true, ctx);
        sc.render_images = get_or<bool>(j, "render_images", false, ctx);
        sc.lane_stroke_px = get_or<double>(j, "lane_stroke_px", sc.lane_stroke_px, ctx);
        sc.seed = get_or<std::uint64_t>(j, "seed", 42, ctx);
        validate(sc);
        return sc;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidScenario) throw;
        throw Error(ErrorCode::InvalidScenario, e.what());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidScenario, ctx + ": " + e.what());
    }
}

inline ordered_json scenario_to_json(const Scenario& sc) {
    ordered_json j;
    j["name"] = sc.name;
    j["origin"] = {{"lat", sc.origin.lat}, {"lon", sc.origin.lon}};
    j["road_heading_deg"] = rad2deg(sc.road_heading_rad);
    j["duration_s"] = sc.duration_s;
    j["fps"] = sc.fps;
    j["camera"] = camera_to_json(sc.camera, sc.extrinsics);
    j["ego"] = detail::actor_to_json(sc.ego, false);
    ordered_json targets = ordered_json::array();
    for (const auto& t : sc.targets) targets.push_back(detail::actor_to_json(t, true));
    j["targets"] = targets;
    j["lane_lines_m"] = sc.lane_lines_m;
    j["max_range_m"] = sc.max_range_m;
    j["lane_near_m"] = sc.lane_near_m;
    j["lane_far_m"] = sc.lane_far_m;
    j["noise"] = {{"gps_sigma_m", sc.noise.gps_sigma_m},
                  {"pixel_jitter_px", sc.noise.pixel_jitter_px},
                  {"quantize", sc.noise.quantize}};
    j["emit_segments"] = sc.emit_segments;
    j["render_images"] = sc.render_images;
    j["lane_stroke_px"] = sc.lane_stroke_px;
    j["seed"] = sc.seed;
    return j;
}

// ---------------------------------------------------------------------------
// Reports

inline ordered_json range_to_json(const Range3& r) { return {{"min", r.min}, {"avg", r.avg}, {"max", r.max}}; }

inline ordered_json report_to_json(const EvalReport& report) {
    ordered_json cells = ordered_json::array();
    for (const auto& c : report.cells) {
        ordered_json j;
        j["target_id"] = c.target_id;
        j["approach"] = c.approach;
        j["frames"] = c.stats.count;
        j["min_m"] = c.stats.min_m;
        j["avg_m"] = c.stats.avg_m;
        j["max_m"] = c.stats.max_m;
        j["rmse_m"] = c.stats.rmse_m;
        if (c.covariates) {
            j["ego_speed_kmh"] = range_to_json(c.covariates->ego_speed_kmh);
            j["target_speed_kmh"] = range_to_json(c.covariates->target_speed_kmh);
            j["distance_m"] = range_to_json(c.covariates->distance_m);
        }
        j["unmatched_t"] = c.unmatched;
        cells.push_back(j);
    }
    ordered_json out;
    out["cells"] = cells;
    return out;
}

inline std::string report_table(const EvalReport& report) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-10s %-10s %6s %8s %8s %8s %8s\n", "target", "approach", "frames", "min_m", "avg_m",
                  "max_m", "rmse_m");
    out += buf;
    for (const auto& c : report.cells) {
        std::snprintf(buf, sizeof(buf), "%-10s %-10s %6zu %8.3f %8.3f %8.3f %8.3f\n", c.target_id.c_str(),
                      c.approach.c_str(), c.stats.count, c.stats.min_m, c.stats.avg_m, c.stats.max_m, c.stats.rmse_m);
        out += buf;
    }
    bool header = false;
    for (const auto& c : report.cells) {
        if (!c.covariates) continue;
        if (!header) {
            std::snprintf(buf, sizeof(buf), "\n%-10s %-10s %26s %26s %26s\n", "target", "approach",
                          "ego km/h (min/avg/max)", "target km/h (min/avg/max)", "distance m (min/avg/max)");
            out += buf;
            header = true;
        }
        const auto& v = *c.covariates;
        std::snprintf(buf, sizeof(buf), "%-10s %-10s %8.2f %8.2f %8.2f %8.2f %8.2f %8.2f %8.2f %8.2f %8.2f\n",
                      c.target_id.c_str(), c.approach.c_str(), v.ego_speed_kmh.min, v.ego_speed_kmh.avg,
                      v.ego_speed_kmh.max, v.target_speed_kmh.min, v.target_speed_kmh.avg, v.target_speed_kmh.max,
                      v.distance_m.min, v.distance_m.avg, v.distance_m.max);
        out += buf;
    }
    return out;
}

inline std::string deviations_csv(const EvalReport& report) {
    std::string out = "target_id,approach,t,longitudinal_m,lateral_m,magnitude_m\n";
    char buf[256];
    for (const auto& c : report.cells) {
        for (const auto& s : c.stats.series) {
            std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%.6f,%.6f,%.6f\n", c.target_id.c_str(), c.approach.c_str(), s.t,
                          s.deviation.longitudinal_m, s.deviation.lateral_m, s.deviation.magnitude_m);
            out += buf;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// GeoJSON

/// One LineString per (target, approach) followed by one Point per sample.
/// Coordinates are [lon, lat].
inline ordered_json to_geojson(const std::vector<TraceRow>& rows) {
    std::map<std::pair<std::string, std::string>, std::vector<const TraceRow*>> groups;
    for (const auto& r : rows) groups[{r.target_id, r.approach}].push_back(&r);
    ordered_json features = ordered_json::array();
    for (const auto& [key, members] : groups) {
        ordered_json coords = ordered_json::array();
        for (const auto* r : members) coords.push_back({r->p.lon, r->p.lat});
        ordered_json props;
        props["target_id"] = key.first;
        props["approach"] = key.second.empty() ? "truth" : key.second;
        props["points"] = members.size();
        ordered_json geom;
        if (members.size() >= 2) {
            geom["type"] = "LineString";
            geom["coordinates"] = coords;
        } else {
            geom["type"] = "Point";
            geom["coordinates"] = coords[0];
        }
        features.push_back({{"type", "Feature"}, {"geometry", geom}, {"properties", props}});
    }
    for (const auto& [key, members] : groups) {
        for (const auto* r : members) {
            ordered_json props;
            props["target_id"] = key.first;
            props["approach"] = key.second.empty() ? "truth" : key.second;
            props["t"] = r->t;
            if (r->extra.contains("d_m")) props["d_m"] = r->extra.at("d_m");
            if (r->extra.contains("alpha_deg")) props["alpha_deg"] = r->extra.at("alpha_deg");
            ordered_json geom{{"type", "Point"}, {"coordinates", {r->p.lon, r->p.lat}}};
            features.push_back({{"type", "Feature"}, {"geometry", geom}, {"properties", props}});
        }
    }
    return {{"type", "FeatureCollection"}, {"features", features}};
}

}  // namespace geoloc::io
