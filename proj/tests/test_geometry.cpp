#include <gtest/gtest.h>

#include <random>

#include "mvp/error.hpp"
#include "mvp/geometry.hpp"

using namespace mvp;

namespace {

void expect_box_near(const YoloBox& a, const YoloBox& b, double tol) {
    EXPECT_NEAR(a.xc, b.xc, tol);
    EXPECT_NEAR(a.yc, b.yc, tol);
    EXPECT_NEAR(a.w, b.w, tol);
    EXPECT_NEAR(a.h, b.h, tol);
}

void expect_box_near(const PixelBox& a, const PixelBox& b, double tol) {
    EXPECT_NEAR(a.x_min, b.x_min, tol);
    EXPECT_NEAR(a.y_min, b.y_min, tol);
    EXPECT_NEAR(a.x_max, b.x_max, tol);
    EXPECT_NEAR(a.y_max, b.y_max, tol);
}

}  // namespace

TEST(Geometry, ToYoloCenteredBox) {
    expect_box_near(to_yolo({320, 180, 960, 540}, {1280, 720}), {0.5, 0.5, 0.5, 0.5}, 1e-15);
}

TEST(Geometry, ToYoloFullFrame) {
    expect_box_near(to_yolo({0, 0, 1280, 720}, {1280, 720}), {0.5, 0.5, 1.0, 1.0}, 1e-15);
}

TEST(Geometry, ToYoloHandEvaluated) {
    // ((10+50)/200, (20+60)/200, 40/100, 40/100)
    expect_box_near(to_yolo({10, 20, 50, 60}, {100, 100}), {0.30, 0.40, 0.40, 0.40}, 1e-15);
}

TEST(Geometry, ToPixelInverse) {
    expect_box_near(to_pixel({0.5, 0.5, 1, 1}, {1280, 720}), {0, 0, 1280, 720}, 1e-12);
    expect_box_near(to_pixel({0.30, 0.40, 0.40, 0.40}, {100, 100}), {10, 20, 50, 60}, 1e-12);
}

TEST(Geometry, RejectsNonFiniteAndBadFrames) {
    EXPECT_THROW(to_yolo({0, 0, std::nan(""), 1}, {10, 10}), GeometryError);
    EXPECT_THROW(to_pixel({0.5, 0.5, INFINITY, 0.1}, {10, 10}), GeometryError);
    EXPECT_THROW(to_yolo({0, 0, 1, 1}, {0, 10}), GeometryError);
}

TEST(Geometry, RoundTripProperty) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> dim(1, 4096);
    for (int i = 0; i < 2000; ++i) {
        const FrameSize frame{dim(rng), dim(rng)};
        const YoloBox b{unit(rng), unit(rng), unit(rng), unit(rng)};
        expect_box_near(to_yolo(to_pixel(b, frame), frame), b, 1e-12);

        const PixelBox p{unit(rng) * frame.width, unit(rng) * frame.height, unit(rng) * frame.width,
                         unit(rng) * frame.height};
        expect_box_near(to_pixel(to_yolo(p, frame), frame), p, 1e-12 * std::max(frame.width, frame.height));

        const double area = area_px(b, frame);
        EXPECT_NEAR(area_px(to_yolo(to_pixel(b, frame), frame), frame), area, 1e-9 * (1 + area));
    }
}

TEST(Geometry, ClipPartiallyOutside) {
    const FrameSize frame{100, 100};
    const YoloBox in = to_yolo({-20, 10, 40, 50}, frame);
    const auto out = clip_and_validate(in, frame, 1.0);
    ASSERT_TRUE(out);
    // Clipped to (0,10,40,50): ((0+40)/200, (10+50)/200, 40/100, 40/100)
    expect_box_near(*out, {0.20, 0.30, 0.40, 0.40}, 1e-12);
}

TEST(Geometry, ClipDropsBoxOutsideFrame) {
    const FrameSize frame{100, 100};
    EXPECT_FALSE(clip_and_validate(to_yolo({120, 10, 160, 50}, frame), frame, 1.0));
    EXPECT_FALSE(clip_and_validate(to_yolo({-60, -60, -10, -10}, frame), frame, 1.0));
}

TEST(Geometry, ClipIsIdentityAtFrameBounds) {
    const FrameSize frame{1280, 720};
    const YoloBox full{0.5, 0.5, 1.0, 1.0};
    const auto out = clip_and_validate(full, frame, 1.0);
    ASSERT_TRUE(out);
    EXPECT_EQ(*out, full);
}

TEST(Geometry, ClipDropsTinyAndInvertedBoxes) {
    const FrameSize frame{100, 100};
    EXPECT_FALSE(clip_and_validate(to_yolo({10, 10, 10.5, 10.5}, frame), frame, 1.0));  // 0.25 px^2
    EXPECT_TRUE(clip_and_validate(to_yolo({10, 10, 11, 11}, frame), frame, 1.0));       // exactly 1 px^2
    EXPECT_FALSE(clip_and_validate({0.5, 0.5, -0.1, 0.2}, frame, 1.0));
    EXPECT_FALSE(clip_and_validate(to_yolo({0, 10, 0, 50}, frame), frame, 1.0));  // zero width
    EXPECT_THROW(clip_and_validate({0.5, 0.5, 0.1, 0.1}, frame, 0.0), GeometryError);
}

TEST(Geometry, ClipIsIdempotent) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> center(-0.5, 1.5);
    std::uniform_real_distribution<double> size(0.0, 1.2);
    const FrameSize frame{640, 480};
    int kept = 0;
    for (int i = 0; i < 2000; ++i) {
        const YoloBox b{center(rng), center(rng), size(rng), size(rng)};
        const auto once = clip_and_validate(b, frame, 1.0);
        if (!once) continue;
        ++kept;
        const auto twice = clip_and_validate(*once, frame, 1.0);
        ASSERT_TRUE(twice);
        expect_box_near(*twice, *once, 1e-12);
    }
    EXPECT_GT(kept, 200);
}

TEST(Geometry, AreaPx) {
    EXPECT_DOUBLE_EQ(area_px({0.5, 0.5, 1, 1}, {100, 100}), 10000.0);
    EXPECT_DOUBLE_EQ(area_px({0.5, 0.5, 0.5, 0.5}, {100, 100}), 2500.0);
    // 1280 * 720 * 0.4 * 0.4
    EXPECT_NEAR(area_px({0.3, 0.4, 0.4, 0.4}, {1280, 720}), 147456.0, 1e-9);
}
