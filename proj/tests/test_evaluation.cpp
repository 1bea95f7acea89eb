#include "helpers.hpp"

#include <geoloc/evaluation.hpp>
#include <geoloc/simulator.hpp>

#include <gtest/gtest.h>

using namespace geoloc;
using testing_helpers::expect_code;

namespace {

const GeoPoint kOrigin{30.66, 104.06};

// Truth moving north at 10 m/s, sampled once per second.
std::vector<TimedPoint> north_truth(int n) {
    std::vector<TimedPoint> out;
    for (int i = 0; i < n; ++i) out.push_back({double(i), offset_enu(kOrigin, 0.0, 10.0 * i)});
    return out;
}

}  // namespace

TEST(Match, ExactTimesAndInterpolation) {
    const auto truth = north_truth(5);
    const std::vector<TimedPoint> est{{1.0, truth[1].p}, {2.5, offset_enu(kOrigin, 0.0, 25.0)}};
    const MatchResult m = match_frames(est, truth);
    ASSERT_EQ(m.pairs.size(), 2u);
    EXPECT_EQ(m.pairs[0].truth, truth[1].p);
    EXPECT_LT(great_circle_distance(m.pairs[1].truth, est[1].p), 1e-6);
    EXPECT_NEAR(m.pairs[1].truth_heading_rad, 0.0, 1e-6);
}

TEST(Match, NearestMode) {
    const auto truth = north_truth(5);
    const MatchResult m = match_frames({{2.3, truth[2].p}}, truth, 0.5, MatchMode::Nearest);
    ASSERT_EQ(m.pairs.size(), 1u);
    EXPECT_EQ(m.pairs[0].truth, truth[2].p);
}

TEST(Match, UnmatchedAndEmpty) {
    const auto truth = north_truth(5);
    const MatchResult m = match_frames({{-1.0, kOrigin}, {1.0, kOrigin}, {9.0, kOrigin}}, truth);
    EXPECT_EQ(m.pairs.size(), 1u);
    EXPECT_EQ(m.unmatched, (std::vector<double>{-1.0, 9.0}));
    expect_code(ErrorCode::EmptyIntersection, [&] { match_frames({{20.0, kOrigin}}, truth); });
    // A gap wider than max_dt leaves an in-span estimate unmatched.
    const std::vector<TimedPoint> sparse{{0.0, kOrigin}, {10.0, offset_enu(kOrigin, 0, 100)}};
    expect_code(ErrorCode::EmptyIntersection, [&] { match_frames({{5.0, kOrigin}}, sparse, 0.5); });
}

TEST(Stats, FrozenValues) {
    // Deviations of 3, 4 and 12 m.
    std::vector<MatchedPair> pairs;
    const double devs[] = {3.0, 4.0, 12.0};
    for (int i = 0; i < 3; ++i) {
        const GeoPoint t = offset_enu(kOrigin, 0.0, 10.0 * i);
        pairs.push_back({double(i), offset_enu(t, devs[i], 0.0), t, 0.0});
    }
    const DeviationStats s = deviation_stats(pairs);
    EXPECT_EQ(s.count, 3u);
    EXPECT_NEAR(s.min_m, 3.0, 1e-6);
    EXPECT_NEAR(s.max_m, 12.0, 1e-6);
    EXPECT_NEAR(s.avg_m, 19.0 / 3.0, 1e-6);
    EXPECT_NEAR(s.rmse_m, std::sqrt(169.0 / 3.0), 1e-6);
    ASSERT_EQ(s.series.size(), 3u);
    EXPECT_NEAR(s.series[2].deviation.lateral_m, 12.0, 1e-6);
    // An east offset follows the parallel, which bends 7 um off the great circle over 12 m.
    EXPECT_NEAR(s.series[2].deviation.longitudinal_m, 0.0, 1e-5);
    expect_code(ErrorCode::EmptyIntersection, [] { deviation_stats({}); });
}

TEST(Stats, ZeroDeviationForIdenticalTraces) {
    const auto truth = north_truth(10);
    const DeviationStats s = deviation_stats(match_frames(truth, truth).pairs);
    EXPECT_EQ(s.max_m, 0.0);
    EXPECT_EQ(s.rmse_m, 0.0);
}

TEST(Covariates, SpeedsAndDistance) {
    std::vector<TimedPoint> ego, tgt;
    for (int i = 0; i < 11; ++i) {
        ego.push_back({double(i), offset_enu(kOrigin, 0.0, 5.0 * i)});
        tgt.push_back({double(i), offset_enu(kOrigin, 0.0, 20.0 + 6.0 * i)});
    }
    const auto pairs = match_frames(tgt, tgt).pairs;
    const Covariates c = covariates(ego, tgt, pairs);
    EXPECT_NEAR(c.ego_speed_kmh.avg, 18.0, 1e-3);
    EXPECT_NEAR(c.target_speed_kmh.max, 21.6, 1e-3);
    EXPECT_NEAR(c.distance_m.min, 20.0, 1e-3);
    EXPECT_NEAR(c.distance_m.max, 30.0, 1e-3);
    EXPECT_NEAR(c.distance_m.avg, 25.0, 1e-3);
    expect_code(ErrorCode::TraceTooShort, [&] { covariates({ego[0]}, tgt, pairs); });
}

TEST(Covariates, ScriptedScenarioAverageSpeed) {
    Scenario sc = scenario_s1();
    sc.ego.speed = SpeedProfile::constant(26.38 / 3.6);
    const GeneratedScene scene = generate(sc);
    std::vector<TimedPoint> v1;
    for (const auto& s : scene.truth.targets)
        if (s.target_id == "v1") v1.push_back({s.t, s.position});
    const Covariates c = covariates(scene.truth.ego, v1, match_frames(v1, v1).pairs);
    EXPECT_NEAR(c.ego_speed_kmh.avg, 26.38, 0.01 * 26.38);
    EXPECT_NEAR(c.target_speed_kmh.avg, 26.5, 0.01 * 26.5);
}
