#include "helpers.hpp"

#include <geoloc/image.hpp>
#include <geoloc/simulator.hpp>
#include <geoloc/vision.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace geoloc;
using testing_helpers::expect_code;

namespace {

GrayImage vertical_step(int w, int h, int col) {
    GrayImage img(w, h, 20);
    for (int y = 0; y < h; ++y)
        for (int x = col; x < w; ++x) img.at(x, y) = 220;
    return img;
}

int count_edges(const GrayImage& e) {
    int n = 0;
    for (auto p : e.pixels) n += p == kEdge;
    return n;
}

}  // namespace

TEST(Image, PgmRoundTrip) {
    GrayImage img(5, 3, 7);
    img.at(4, 2) = 255;
    img.at(0, 1) = 0;
    const std::string bytes = encode_pgm(img);
    std::istringstream in(bytes);
    EXPECT_EQ(read_pgm(in), img);
}

TEST(Image, PgmHeaderComments) {
    std::string bytes = "P5\n# comment\n2 1\n# another\n255\n";
    bytes += '\x01';
    bytes += '\x02';
    std::istringstream in(bytes);
    const GrayImage img = read_pgm(in);
    EXPECT_EQ(img.width, 2);
    EXPECT_EQ(img.at(1, 0), 2);
}

TEST(Image, PgmRejectsBadInput) {
    std::istringstream p2("P2\n1 1\n255\n0\n");
    expect_code(ErrorCode::ParseError, [&] { read_pgm(p2); });
    std::istringstream deep("P5\n1 1\n65535\n\x01\x02");
    expect_code(ErrorCode::ParseError, [&] { read_pgm(deep); });
    std::istringstream truncated("P5\n4 4\n255\nabc");
    expect_code(ErrorCode::ParseError, [&] { read_pgm(truncated); });
    expect_code(ErrorCode::ParseError, [] { read_pgm_file("/nonexistent/image.pgm"); });
}

TEST(Canny, ThresholdValidation) {
    const GrayImage img(8, 8, 0);
    expect_code(ErrorCode::BadThresholds, [&] { canny_edges(img, 150, 50, 1.4); });
    expect_code(ErrorCode::BadThresholds, [&] { canny_edges(img, 0, 50, 1.4); });
    expect_code(ErrorCode::BadThresholds, [&] { canny_edges(img, 50, 50, 1.4); });
    expect_code(ErrorCode::BadThresholds, [&] { canny_edges(img, 10, 50, -1.0); });
}

TEST(Canny, FlatImageHasNoEdges) {
    EXPECT_EQ(count_edges(canny_edges(GrayImage(40, 30, 128))), 0);
}

TEST(Canny, StepEdgeIsOnePixelWide) {
    const GrayImage e = canny_edges(vertical_step(64, 48, 30));
    int first_col = -1;
    for (int y = 0; y < 48; ++y) {
        int n = 0;
        int col = -1;
        for (int x = 0; x < 64; ++x) {
            if (e.at(x, y) == kEdge) {
                ++n;
                col = x;
            }
        }
        EXPECT_EQ(n, 1) << "row " << y;
        // The step lies between columns 29 and 30; either neighbour may win.
        EXPECT_TRUE(col == 29 || col == 30) << "row " << y;
        if (first_col < 0) first_col = col;
        EXPECT_EQ(col, first_col) << "row " << y;
    }
}

TEST(Canny, OutputIsBinary) {
    const GrayImage e = canny_edges(vertical_step(32, 32, 10));
    for (auto p : e.pixels) EXPECT_TRUE(p == 0 || p == kEdge);
}

TEST(Canny, HysteresisDropsIsolatedWeakEdges) {
    // A faint step (weak only) is removed; a strong one survives.
    GrayImage faint(40, 20, 100);
    for (int y = 0; y < 20; ++y)
        for (int x = 20; x < 40; ++x) faint.at(x, y) = 115;
    EXPECT_EQ(count_edges(canny_edges(faint, 5, 200, 1.0)), 0);
    EXPECT_EQ(count_edges(canny_edges(faint, 5, 10, 1.0)), 20);
}

TEST(Ppht, SingleLine) {
    GrayImage edges(200, 200, 0);
    for (int x = 20; x < 180; ++x) edges.at(x, 40 + x / 2) = kEdge;
    const auto segs = ppht_segments(edges, {});
    ASSERT_EQ(segs.size(), 1u);
    EXPECT_NEAR(segs[0].slope_angle(), std::atan(0.5), deg2rad(1.0));
    EXPECT_GT(segs[0].length(), 150.0);
}

TEST(Ppht, DeterministicForSeed) {
    const auto lanes = project_lane_lines({-1.75, 1.75, 5.25}, 3, 60, {0.0, 1.4}, intrinsics_from_fov(960, 720, deg2rad(86.7)));
    const GrayImage edges = canny_edges(render_lane_image(lanes, 960, 720, 6));
    HoughParams p;
    const auto a = ppht_segments(edges, p);
    const auto b = ppht_segments(edges, p);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].a, b[i].a);
        EXPECT_EQ(a[i].b, b[i].b);
    }
}

TEST(Ppht, GapBridging) {
    GrayImage edges(300, 50, 0);
    for (int x = 10; x < 290; ++x) {
        if (x >= 140 && x < 146) continue;  // 6 px hole
        edges.at(x, 25) = kEdge;
    }
    HoughParams p;
    p.max_gap = 10;
    EXPECT_EQ(ppht_segments(edges, p).size(), 1u);
    p.max_gap = 3;
    EXPECT_EQ(ppht_segments(edges, p).size(), 2u);
}

TEST(Ppht, EmptyImage) {
    EXPECT_TRUE(ppht_segments(GrayImage(50, 50, 0), {}).empty());
}

TEST(VanishingPoint, ExactIntersection) {
    LaneFilter f = LaneFilter::lower_fraction(720);
    // Two lines through (480, 350) with slopes +-40 degrees.
    const double t = std::tan(deg2rad(40));
    const std::vector<LineSegment> segs{{{480 - 300, 350 + 300 * t}, {480 - 100, 350 + 100 * t}},
                                        {{480 + 100, 350 + 100 * t}, {480 + 300, 350 + 300 * t}}};
    const VanishingPoint vp = vanishing_point(segs, f);
    EXPECT_NEAR(vp.j.u, 480.0, 1e-9);
    EXPECT_NEAR(vp.j.v, 350.0, 1e-9);
    EXPECT_EQ(vp.support_count, 1);
    EXPECT_NEAR(vp.dispersion_px, 0.0, 1e-9);
}

TEST(VanishingPoint, Filtering) {
    LaneFilter f = LaneFilter::lower_fraction(720);
    EXPECT_DOUBLE_EQ(f.roi_top_v, 396.0);
    const std::vector<LineSegment> segs{
        {{0, 700}, {200, 500}},   // 45 deg, kept
        {{0, 500}, {300, 495}},   // nearly horizontal
        {{400, 100}, {600, 300}}, // above the ROI
        {{700, 400}, {710, 700}}, // nearly vertical
    };
    EXPECT_EQ(lane_candidates(segs, f).size(), 1u);
    expect_code(ErrorCode::InsufficientLines, [&] { vanishing_point(segs, f); });
}

TEST(VanishingPoint, ParallelLinesAreIllConditioned) {
    LaneFilter f = LaneFilter::lower_fraction(720);
    const std::vector<LineSegment> segs{{{0, 700}, {200, 500}}, {{100, 700}, {300, 500.5}}};
    expect_code(ErrorCode::IllConditioned, [&] { vanishing_point(segs, f); });
}

TEST(VanishingPoint, MedianRejectsOutlier) {
    LaneFilter f = LaneFilter::lower_fraction(720);
    std::vector<LineSegment> segs;
    for (double deg : {-55.0, -40.0, -30.0, 30.0, 40.0, 55.0}) {
        const double t = std::tan(deg2rad(std::abs(deg)));
        const double dir = deg < 0 ? -1.0 : 1.0;
        segs.push_back({{480 + dir * 100, 360 + 100 * t}, {480 + dir * 250, 360 + 250 * t}});
    }
    segs.push_back({{100, 700}, {300, 450}});  // stray line
    const VanishingPoint vp = vanishing_point(segs, f);
    EXPECT_NEAR(vp.j.u, 480.0, 1e-6);
    EXPECT_NEAR(vp.j.v, 360.0, 1e-6);
    EXPECT_EQ(vp.support_count, 21);
}

TEST(VanishingPoint, FromRenderedImage) {
    const CameraIntrinsics k = intrinsics_from_fov(960, 720, deg2rad(86.7));
    const CameraExtrinsics ext{deg2rad(1.5), 1.4};
    const auto lanes = project_lane_lines({-1.75, 1.75, 5.25}, 3, 60, ext, k);
    const VanishingPoint vp = vanishing_point_from_image(render_lane_image(lanes, 960, 720, 6), LaneFilter::lower_fraction(720));
    EXPECT_NEAR(vp.j.u, 480.0, 0.5);
    EXPECT_NEAR(vp.j.v, 360.0 + k.f * std::tan(ext.pitch_rad), 0.5);
}
