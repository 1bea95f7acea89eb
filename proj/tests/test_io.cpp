#include "helpers.hpp"

#include <geoloc/io.hpp>

#include <gtest/gtest.h>

#include <filesystem>

using namespace geoloc;
using testing_helpers::expect_code;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("geoloc_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST(Io, CameraRoundTrip) {
    const CameraIntrinsics k = intrinsics_from_fov(960, 720, deg2rad(86.7));
    const io::CameraConfig c = io::camera_from_json(io::camera_to_json(k, CameraExtrinsics{deg2rad(1.0), 1.4}));
    EXPECT_NEAR(c.intrinsics.f, k.f, 1e-9);
    ASSERT_TRUE(c.fixed_extrinsics().has_value());
    EXPECT_NEAR(c.fixed_extrinsics()->pitch_rad, deg2rad(1.0), 1e-15);
    EXPECT_EQ(c.fixed_extrinsics()->height_m, 1.4);
    const io::CameraConfig bare = io::camera_from_json(io::json{{"n_h", 640}, {"n_v", 480}, {"fov_h_deg", 60}});
    EXPECT_FALSE(bare.fixed_extrinsics().has_value());
    EXPECT_EQ(bare.intrinsics.principal.u, 320.0);
}

TEST(Io, CameraErrors) {
    expect_code(ErrorCode::ParseError, [] { io::camera_from_json(io::json{{"n_h", 640}, {"n_v", 480}}); });
    expect_code(ErrorCode::ParseError, [] { io::camera_from_json(io::json{{"n_h", 640}, {"n_v", 480}, {"fov_h_deg", 200}}); });
    expect_code(ErrorCode::ParseError,
                [] { io::camera_from_json(io::json{{"n_h", 640}, {"n_v", 480}, {"fov_h_deg", 60}, {"mount_height_m", -1}}); });
}

TEST(Io, DimsRoundTripAndErrors) {
    const DimsTable t = io::dims_from_json(io::dims_to_json(default_dims_table()));
    EXPECT_EQ(t.at("truck").height_m, 3.2);
    expect_code(ErrorCode::ParseError, [] { io::dims_from_json(io::json::array()); });
    expect_code(ErrorCode::ParseError, [] { io::dims_from_json(io::json{{"car", {{"width_m", 0}, {"height_m", 1}}}}); });
}

TEST(Io, FrameRoundTrip) {
    FrameRecord f;
    f.t = 1.5;
    f.ego = {30.66, 104.06};
    f.detections.push_back({"v1", Detection{{1, 2, 3, 4}, "van"}});
    f.image_ref = "images/x.pgm";
    f.vanishing_override = VanishingPoint{{480, 370}, 3, 0.5};
    f.segments_override = std::vector<LineSegment>{{{0, 1}, {2, 3}}};
    const FrameRecord g = io::frame_from_json(io::json::parse(io::frame_to_json(f).dump()), "test");
    EXPECT_EQ(g.t, 1.5);
    EXPECT_EQ(g.ego, f.ego);
    ASSERT_EQ(g.detections.size(), 1u);
    EXPECT_EQ(g.detections[0].det.class_label, "van");
    EXPECT_EQ(g.detections[0].det.bbox.v_max, 4.0);
    EXPECT_EQ(*g.image_ref, "images/x.pgm");
    EXPECT_EQ(g.vanishing_override->j.v, 370.0);
    EXPECT_EQ(g.segments_override->at(0).b.u, 2.0);
}

TEST(Io, FrameErrors) {
    expect_code(ErrorCode::ParseError, [] { io::frame_from_json(io::json{{"t", 0}, {"lat", 95}, {"lon", 0}}, "x"); });
    expect_code(ErrorCode::ParseError, [] {
        io::frame_from_json(io::json::parse(R"({"t":0,"lat":1,"lon":2,"detections":[{"target_id":"a","bbox":[1,2,3]}]})"), "x");
    });
    expect_code(ErrorCode::ParseError, [] { io::frame_from_json(io::json{{"lat", 1}, {"lon", 2}}, "x"); });
}

TEST(Io, JsonLinesSkipsBlankLinesAndReportsLine) {
    const fs::path d = temp_dir("jsonl");
    io::write_atomic((d / "a.jsonl").string(), "{\"t\":0,\"lat\":1,\"lon\":2}\n\n{\"t\":1,\"lat\":1,\"lon\":2.5}\n");
    const auto rows = io::read_trace((d / "a.jsonl").string());
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1].p.lon, 2.5);
    io::write_atomic((d / "b.jsonl").string(), "{\"t\":0,\"lat\":1,\"lon\":2}\n{oops\n");
    try {
        io::read_trace((d / "b.jsonl").string());
        ADD_FAILURE() << "expected a parse error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParseError);
        EXPECT_NE(std::string(e.what()).find("b.jsonl:2"), std::string::npos);
    }
    expect_code(ErrorCode::ParseError, [&] { io::read_text((d / "missing.json").string()); });
}

TEST(Io, WriteAtomicLeavesNoTemporary) {
    const fs::path d = temp_dir("atomic");
    const std::string path = (d / "sub" / "out.txt").string();
    io::write_atomic(path, "hello");
    EXPECT_EQ(io::read_text(path), "hello");
    EXPECT_FALSE(fs::exists(path + ".tmp"));
}

TEST(Io, ScenarioRoundTrip) {
    const Scenario a = scenario_s1();
    const Scenario b = io::scenario_from_json(io::json::parse(io::scenario_to_json(a).dump()));
    EXPECT_EQ(io::scenario_to_json(a).dump(), io::scenario_to_json(b).dump());
    ASSERT_EQ(b.targets.size(), 2u);
    EXPECT_NEAR(b.targets[0].speed.speed(3.0), 26.5 / 3.6, 1e-12);
}

TEST(Io, BundledScenariosParse) {
    const std::string root = GEOLOC_SOURCE_DIR;
    const Scenario s1 = io::scenario_from_json(io::read_json_file(root + "/data/scenarios/s1.json"));
    EXPECT_EQ(s1.targets.size(), 2u);
    EXPECT_EQ(s1.ego.speed.knots.size(), 8u);
    const Scenario s2 = io::scenario_from_json(io::read_json_file(root + "/data/scenarios/s2.json"));
    EXPECT_TRUE(s2.targets[0].opposite);
    EXPECT_NO_THROW(io::camera_from_json(io::read_json_file(root + "/data/camera.json")));
    EXPECT_NO_THROW(io::dims_from_json(io::read_json_file(root + "/data/dims.json")));
}

TEST(Io, ScenarioErrorsAreInvalidScenario) {
    io::json j = io::json::parse(io::scenario_to_json(scenario_s1()).dump());
    j["fps"] = -1;
    expect_code(ErrorCode::InvalidScenario, [&] { io::scenario_from_json(j); });
    j = io::json::parse(io::scenario_to_json(scenario_s1()).dump());
    j["targets"][0]["direction"] = "sideways";
    expect_code(ErrorCode::InvalidScenario, [&] { io::scenario_from_json(j); });
    j = io::json::parse(io::scenario_to_json(scenario_s1()).dump());
    j.erase("camera");
    expect_code(ErrorCode::InvalidScenario, [&] { io::scenario_from_json(j); });
    j = io::json::parse(io::scenario_to_json(scenario_s1()).dump());
    j["targets"][0]["speed_profile_kmh"] = "fast";
    expect_code(ErrorCode::InvalidScenario, [&] { io::scenario_from_json(j); });
}

TEST(Io, GeoJsonUsesLonLatOrder) {
    std::vector<io::TraceRow> rows;
    rows.push_back({0.0, "v1", "image", {30.0, 104.0}, io::json{{"d_m", 12.0}}});
    rows.push_back({1.0, "v1", "image", {30.001, 104.002}, io::json::object()});
    rows.push_back({0.0, "v1", "", {30.5, 104.5}, io::json::object()});
    const auto g = io::to_geojson(rows);
    EXPECT_EQ(g["type"], "FeatureCollection");
    const auto& f = g["features"];
    ASSERT_EQ(f.size(), 5u);
    // Groups sort by (target, approach): truth ("") first.
    EXPECT_EQ(f[0]["geometry"]["type"], "Point");
    EXPECT_EQ(f[0]["properties"]["approach"], "truth");
    EXPECT_EQ(f[1]["geometry"]["type"], "LineString");
    EXPECT_EQ(f[1]["geometry"]["coordinates"][0][0], 104.0);
    EXPECT_EQ(f[1]["geometry"]["coordinates"][0][1], 30.0);
    EXPECT_EQ(f[3]["properties"]["d_m"], 12.0);
}

TEST(Io, ReportFormats) {
    EvalReport r;
    ReportCell c;
    c.target_id = "v1";
    c.approach = "image";
    c.stats.count = 2;
    c.stats.min_m = 1.0;
    c.stats.avg_m = 1.5;
    c.stats.max_m = 2.0;
    c.stats.rmse_m = std::sqrt(2.5);
    c.stats.series = {{0.0, {1.0, 0.0, 1.0}}, {1.0, {0.0, -2.0, 2.0}}};
    r.cells.push_back(c);
    const auto j = io::report_to_json(r);
    EXPECT_EQ(j["cells"][0]["frames"], 2);
    EXPECT_FALSE(j["cells"][0].contains("ego_speed_kmh"));
    EXPECT_NE(io::report_table(r).find("1.581"), std::string::npos);
    EXPECT_EQ(io::deviations_csv(r),
              "target_id,approach,t,longitudinal_m,lateral_m,magnitude_m\n"
              "v1,image,0.000000,1.000000,0.000000,1.000000\n"
              "v1,image,1.000000,0.000000,-2.000000,2.000000\n");
}
