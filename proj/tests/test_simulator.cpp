#include "helpers.hpp"

#include <geoloc/groundplane.hpp>
#include <geoloc/simulator.hpp>

#include <gtest/gtest.h>

#include <set>

using namespace geoloc;
using testing_helpers::expect_code;

TEST(SpeedProfile, ConstantAndPiecewise) {
    const SpeedProfile c = SpeedProfile::constant(5.0);
    EXPECT_DOUBLE_EQ(c.distance(4.0), 20.0);
    const SpeedProfile p{{{0.0, 0.0}, {10.0, 10.0}}};
    EXPECT_DOUBLE_EQ(p.speed(5.0), 5.0);
    EXPECT_DOUBLE_EQ(p.speed(20.0), 10.0);
    EXPECT_DOUBLE_EQ(p.distance(10.0), 50.0);
    EXPECT_DOUBLE_EQ(p.distance(12.0), 70.0);
    EXPECT_DOUBLE_EQ(p.distance(-1.0), 0.0);
}

TEST(Simulator, ValidatesScenario) {
    Scenario sc = scenario_s1();
    sc.fps = 0.0;
    expect_code(ErrorCode::InvalidScenario, [&] { validate(sc); });
    sc = scenario_s1();
    sc.targets[0].speed.knots.clear();
    expect_code(ErrorCode::InvalidScenario, [&] { validate(sc); });
    sc = scenario_s1();
    sc.extrinsics.height_m = 0.0;
    expect_code(ErrorCode::InvalidScenario, [&] { validate(sc); });
    sc = scenario_s1();
    sc.targets[1].dims.width_m = -1.0;
    expect_code(ErrorCode::InvalidScenario, [&] { validate(sc); });
}

TEST(Simulator, S1HasTwoTargetsEveryFrame) {
    const GeneratedScene scene = generate(scenario_s1());
    EXPECT_EQ(scene.frames.size(), 71u);
    EXPECT_EQ(scene.truth.targets.size(), 142u);
    std::set<std::string> ids;
    for (const auto& s : scene.truth.targets) ids.insert(s.target_id);
    EXPECT_EQ(ids, (std::set<std::string>{"v1", "v2"}));
    for (const auto& f : scene.frames) {
        EXPECT_EQ(f.detections.size(), 2u) << "t=" << f.t;
        ASSERT_TRUE(f.segments_override.has_value());
        EXPECT_GE(f.segments_override->size(), 2u);
    }
}

TEST(Simulator, AnchorsBackProjectToTruth) {
    Scenario sc = scenario_s1();
    sc.extrinsics = {deg2rad(-3.0), 1.7};
    const GeneratedScene scene = generate(sc);
    for (const auto& f : scene.frames) {
        for (const auto& td : f.detections) {
            const auto it = std::find_if(scene.truth.targets.begin(), scene.truth.targets.end(),
                                         [&](const TruthSample& s) { return s.t == f.t && s.target_id == td.target_id; });
            ASSERT_NE(it, scene.truth.targets.end());
            const RangeMeasurement m = range_and_angle(back_project(td.det.anchor(), sc.extrinsics, sc.camera));
            EXPECT_NEAR(m.d_m, it->d_m, 1e-9);
            EXPECT_NEAR(m.theta_rad, std::abs(it->theta_rad), 1e-9);
        }
    }
}

TEST(Simulator, BoxSizeMatchesCameraDepth) {
    const CameraIntrinsics k = intrinsics_from_fov(960, 720, deg2rad(86.7));
    const CameraExtrinsics ext{0.0, 1.4};
    const BoundingBox b = synthesize_box({0.0, 0.0, 20.0}, {1.8, 1.5}, ext, k);
    EXPECT_NEAR(b.width(), k.f * 1.8 / 20.0, 1e-9);
    EXPECT_NEAR(b.height(), k.f * 1.5 / 20.0, 1e-9);
    EXPECT_NEAR(b.v_max, 360.0 + k.f * 1.4 / 20.0, 1e-9);
    expect_code(ErrorCode::BehindCamera, [&] { synthesize_box({0.0, 0.0, -2.0}, {1.8, 1.5}, ext, k); });
}

TEST(Simulator, S2SensingWindowIsShort) {
    const GeneratedScene scene = generate(scenario_s2());
    int frames_with_target = 0;
    for (const auto& f : scene.frames) frames_with_target += !f.detections.empty();
    EXPECT_GE(frames_with_target, 2);
    EXPECT_LE(frames_with_target, 4);
}

TEST(Simulator, NoiseIsSeededAndAppliedAfterTruth) {
    Scenario sc = scenario_s1();
    sc.noise = {1.5, 2.0, false};
    const GeneratedScene a = generate(sc);
    const GeneratedScene b = generate(sc);
    sc.seed = 43;
    const GeneratedScene c = generate(sc);
    ASSERT_EQ(a.frames.size(), c.frames.size());
    EXPECT_EQ(a.frames[5].ego, b.frames[5].ego);
    EXPECT_EQ(a.frames[5].detections[0].det.bbox.u_min, b.frames[5].detections[0].det.bbox.u_min);
    EXPECT_NE(a.frames[5].ego, c.frames[5].ego);
    // Truth stays noise-free.
    EXPECT_EQ(a.truth.ego[5].p, generate(scenario_s1()).truth.ego[5].p);
}

TEST(Simulator, GpsNoiseHasRequestedRms) {
    std::vector<FrameRecord> recs(20000);
    for (auto& r : recs) r.ego = {30.66, 104.06};
    const auto noisy = inject_noise(recs, 1.5, 0.0, 9);
    double sum_sq = 0.0;
    for (const auto& r : noisy) {
        const EnuOffset e = to_enu({30.66, 104.06}, r.ego);
        sum_sq += e.east_m * e.east_m + e.north_m * e.north_m;
    }
    EXPECT_NEAR(std::sqrt(sum_sq / noisy.size()), 1.5, 0.03);
    expect_code(ErrorCode::InvalidArgument, [&] { inject_noise(recs, -1.0, 0.0, 1); });
}

TEST(Simulator, PixelJitterIsBounded) {
    Scenario sc = scenario_s1();
    const GeneratedScene clean = generate(sc);
    sc.noise.pixel_jitter_px = 2.0;
    const GeneratedScene noisy = generate(sc);
    double max_dev = 0.0;
    for (std::size_t i = 0; i < clean.frames.size(); ++i) {
        for (std::size_t j = 0; j < clean.frames[i].detections.size(); ++j) {
            const auto& a = clean.frames[i].detections[j].det.bbox;
            const auto& b = noisy.frames[i].detections[j].det.bbox;
            for (double d : {a.u_min - b.u_min, a.v_min - b.v_min, a.u_max - b.u_max, a.v_max - b.v_max}) {
                max_dev = std::max(max_dev, std::abs(d));
            }
        }
    }
    EXPECT_LE(max_dev, 2.0);
    EXPECT_GT(max_dev, 1.5);
}

TEST(Simulator, RendersImagesWhenAsked) {
    Scenario sc = scenario_s2();
    sc.render_images = true;
    const GeneratedScene scene = generate(sc);
    ASSERT_EQ(scene.images.size(), scene.frames.size());
    EXPECT_EQ(scene.images[0].first, "frame_00000.pgm");
    EXPECT_EQ(*scene.frames[0].image_ref, "frame_00000.pgm");
    EXPECT_EQ(scene.images[0].second.width, 960);
    int bright = 0;
    for (auto p : scene.images[0].second.pixels) bright += p > 128;
    EXPECT_GT(bright, 1000);
}

TEST(Simulator, RecoversScriptedAverageSpeed) {
    Scenario sc = scenario_s1();
    sc.ego.speed = {{{0.0, 17.5 / 3.6}, {35.0, 35.26 / 3.6}, {70.0, 17.5 / 3.6}}};
    const GeneratedScene scene = generate(sc);
    const double total = great_circle_distance(scene.truth.ego.front().p, scene.truth.ego.back().p);
    EXPECT_NEAR(total / 70.0 * 3.6, 26.38, 0.01 * 26.38);
}
