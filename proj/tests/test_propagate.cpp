#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mvp/error.hpp"
#include "mvp/propagate.hpp"
#include "test_util.hpp"

using namespace mvp;
using mvp::testing::cell_center_frame;
using mvp::testing::past_vector;

namespace {

const FrameSize kFrame{1000, 1000};
const PixelBox kBox{100, 100, 190, 190};  // 90x90, 30 px cells

YoloBox box_yolo() { return to_yolo(kBox, kFrame); }

Vec2 constant(Vec2) { return {3, 4}; }

MvFrame random_field(std::mt19937_64& rng, const PixelBox& box, int per_cell, double spread) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> d(-spread, spread);
    MvFrame f{1, {}};
    for (int i = 0; i < 9 * per_cell; ++i) {
        const double x = box.x_min + unit(rng) * box.width();
        const double y = box.y_min + unit(rng) * box.height();
        f.vectors.push_back(past_vector(1, x, y, d(rng), d(rng)));
    }
    return f;
}

}  // namespace

TEST(Propagate, ConstantFieldHasZeroSpread) {
    const auto stats = aggregate_grid(box_yolo(), cell_center_frame(kBox, constant), kFrame, {});
    ASSERT_TRUE(stats);
    EXPECT_EQ(stats->nonempty, 9);
    EXPECT_NEAR(stats->mean_disp.x, 3, 1e-12);
    EXPECT_NEAR(stats->mean_disp.y, 4, 1e-12);
    EXPECT_NEAR(stats->sigma_tr, 0, 1e-12);
}

TEST(Propagate, SigmaTrHandExample) {
    // Eight non-empty cells: four means (2,0), four means (4,0), center empty.
    int k = 0;
    const auto frame = cell_center_frame(
        kBox, [&](Vec2) { return Vec2{(k++ % 2) ? 4.0 : 2.0, 0.0}; },
        [](int r, int c) { return r == 1 && c == 1; });
    const auto stats = aggregate_grid(box_yolo(), frame, kFrame, {});
    ASSERT_TRUE(stats);
    EXPECT_EQ(stats->nonempty, 8);
    EXPECT_NEAR(stats->mean_disp.x, 3, 1e-12);
    EXPECT_NEAR(stats->mean_disp.y, 0, 1e-12);
    EXPECT_NEAR(stats->sigma_tr, 1, 1e-12);
}

TEST(Propagate, CellMeansAverageMultipleVectors) {
    // Two vectors in one cell: the cell contributes their mean once.
    MvFrame f{1, {past_vector(1, 105, 105, 0, 0), past_vector(1, 110, 110, 2, 2), past_vector(1, 180, 180, 4, 4)}};
    const auto stats = aggregate_grid(box_yolo(), f, kFrame, {});
    ASSERT_TRUE(stats);
    EXPECT_EQ(stats->cells[0][0].count, 2);
    EXPECT_EQ(stats->cells[2][2].count, 1);
    EXPECT_EQ(stats->nonempty, 2);
    EXPECT_NEAR(stats->mean_disp.x, 2.5, 1e-12);
    EXPECT_NEAR(stats->sigma_tr, std::sqrt(4.5), 1e-12);
}

TEST(Propagate, EmptyBoxFails) {
    MvFrame outside{1, {past_vector(1, 500, 500, 1, 1), past_vector(1, 190, 150, 1, 1)}};
    EXPECT_FALSE(aggregate_grid(box_yolo(), outside, kFrame, {}));
    EXPECT_TRUE(std::holds_alternative<Failed>(propagate_box(box_yolo(), outside, kFrame, {})));
    EXPECT_TRUE(std::holds_alternative<Failed>(propagate_box(box_yolo(), MvFrame{1, {}}, kFrame, {})));
}

TEST(Propagate, FutureVectorsIgnored) {
    MvFrame f = cell_center_frame(kBox, constant);
    for (auto& mv : f.vectors) mv.direction = MvDirection::Future;
    EXPECT_FALSE(aggregate_grid(box_yolo(), f, kFrame, {}));
}

TEST(Propagate, TranslationExample) {
    const FrameSize frame{100, 100};
    const YoloBox box{0.5, 0.5, 0.2, 0.2};
    const auto mvs = cell_center_frame(to_pixel(box, frame), constant);
    const auto stats = aggregate_grid(box, mvs, frame, {});
    ASSERT_TRUE(stats);
    const auto t = try_translate(box, *stats, frame, {});
    ASSERT_TRUE(t);
    EXPECT_NEAR(t->box.xc, 0.53, 1e-12);
    EXPECT_NEAR(t->box.yc, 0.54, 1e-12);
    EXPECT_DOUBLE_EQ(t->box.w, 0.2);
    EXPECT_DOUBLE_EQ(t->box.h, 0.2);
}

TEST(Propagate, TranslationThresholdInclusive) {
    MvpConfig cfg;
    GridStats stats;
    stats.nonempty = 9;
    stats.mean_disp = {1, 1};
    stats.sigma_tr = cfg.tau_tr;
    EXPECT_TRUE(try_translate(box_yolo(), stats, kFrame, cfg));
    stats.sigma_tr = cfg.tau_tr + 0.001;
    EXPECT_FALSE(try_translate(box_yolo(), stats, kFrame, cfg));
}

TEST(Propagate, RadialFieldScales) {
    const auto stats = aggregate_grid(box_yolo(), cell_center_frame(kBox, [](Vec2 g) {
                                          return Vec2{0.1 * g.x, 0.1 * g.y};
                                      }, [](int r, int c) { return r == 1 && c == 1; }),
                                      kFrame, {});
    ASSERT_TRUE(stats);
    EXPECT_EQ(stats->scale_cells, 8);
    for (const auto& row : stats->cells) {
        for (const auto& cell : row) {
            if (cell.scale_ratio) {
                EXPECT_NEAR(*cell.scale_ratio, 1.1, 1e-3);
            }
        }
    }
    EXPECT_NEAR(*stats->sigma_r, 0, 1e-4);
    const auto s = try_scale(box_yolo(), *stats, kFrame, {});
    ASSERT_TRUE(s);
    const YoloBox prev = box_yolo();
    EXPECT_NEAR(s->box.w / prev.w, 1.1, 1e-3);
    EXPECT_NEAR(s->box.h / prev.h, 1.1, 1e-3);
    EXPECT_NEAR(s->box.xc, prev.xc, 1e-12);
    EXPECT_NEAR(s->mu_r, 1.1, 1e-3);
}

TEST(Propagate, ZeroFieldScaleNearOne) {
    const auto stats = aggregate_grid(box_yolo(), cell_center_frame(kBox, [](Vec2) { return Vec2{}; }), kFrame, {});
    ASSERT_TRUE(stats);
    ASSERT_TRUE(stats->mu_r);
    EXPECT_LT(*stats->mu_r, 1.0);
    EXPECT_GT(*stats->mu_r, 1.0 - 1e-4);
    for (const auto& row : stats->cells) {
        for (const auto& cell : row) {
            if (cell.scale_ratio) {
                EXPECT_LT(*cell.scale_ratio, 1.0);
            }
        }
    }
    const auto s = try_scale(box_yolo(), *stats, kFrame, {});
    ASSERT_TRUE(s);
    EXPECT_NEAR(s->box.w * kFrame.width, 90.0, 0.01);
}

TEST(Propagate, CenterCellOnlyNotScalable) {
    const auto stats = aggregate_grid(
        box_yolo(), cell_center_frame(kBox, constant, [](int r, int c) { return !(r == 1 && c == 1); }), kFrame, {});
    ASSERT_TRUE(stats);
    EXPECT_EQ(stats->scale_cells, 0);
    EXPECT_FALSE(stats->mu_r);
    EXPECT_FALSE(try_scale(box_yolo(), *stats, kFrame, {}));
}

TEST(Propagate, RadiusFloorExcludesShortLevers) {
    MvpConfig cfg;
    cfg.radius_floor = 35.0;  // side cells (30 px) excluded, corners (42.4 px) kept
    const auto stats = aggregate_grid(box_yolo(), cell_center_frame(kBox, constant), kFrame, cfg);
    ASSERT_TRUE(stats);
    EXPECT_EQ(stats->scale_cells, 4);
}

TEST(Propagate, Composition) {
    EXPECT_TRUE(std::holds_alternative<Translated>(
        propagate_box(box_yolo(), cell_center_frame(kBox, constant), kFrame, {})));

    // 0.2 g on 30 px levers: sigma_tr ~ 7.3 > 4, ratios all 1.2.
    const auto radial = cell_center_frame(kBox, [](Vec2 g) { return Vec2{0.2 * g.x, 0.2 * g.y}; });
    const auto stats = aggregate_grid(box_yolo(), radial, kFrame, {});
    ASSERT_TRUE(stats);
    EXPECT_GT(stats->sigma_tr, MvpConfig{}.tau_tr);
    const auto scaled = propagate_box(box_yolo(), radial, kFrame, {});
    ASSERT_TRUE(std::holds_alternative<Scaled>(scaled));
    EXPECT_NEAR(std::get<Scaled>(scaled).mu_r, 1.2, 1e-3);
    EXPECT_STREQ(outcome_name(scaled), "scaled");

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> d(-20, 20);
    const auto noisy = cell_center_frame(kBox, [&](Vec2) { return Vec2{d(rng), d(rng)}; });
    const auto failed = propagate_box(box_yolo(), noisy, kFrame, {});
    EXPECT_TRUE(std::holds_alternative<Failed>(failed));
    EXPECT_STREQ(outcome_name(failed), "failed");
}

TEST(Propagate, ScaledOnlyAfterTranslationRejected) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> spread(0.5, 12.0);
    std::uniform_real_distribution<double> s(0.85, 1.2);
    int scaled = 0;
    for (int trial = 0; trial < 500; ++trial) {
        MvFrame f;
        if (trial % 2 == 0) {
            f = random_field(rng, kBox, 3, spread(rng));
        } else {
            const double k = s(rng) - 1.0;
            f = cell_center_frame(kBox, [k](Vec2 g) { return Vec2{k * g.x, k * g.y}; });
        }
        const auto out = propagate_box(box_yolo(), f, kFrame, {});
        if (std::holds_alternative<Scaled>(out)) {
            ++scaled;
            const auto stats = aggregate_grid(box_yolo(), f, kFrame, {});
            EXPECT_FALSE(try_translate(box_yolo(), *stats, kFrame, {}));
        }
    }
    EXPECT_GT(scaled, 0);
}

TEST(Propagate, TranslationEquivariance) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> shift(-30, 30);
    int checked = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const MvFrame base = random_field(rng, kBox, 2, 3.0);
        const double du = shift(rng), dv = shift(rng);
        MvFrame moved = base;
        for (auto& mv : moved.vectors) {
            mv.dst_x += du;
            mv.dst_y += dv;
        }
        const auto a = aggregate_grid(box_yolo(), base, kFrame, {});
        const auto b = aggregate_grid(box_yolo(), moved, kFrame, {});
        ASSERT_TRUE(a && b);
        EXPECT_NEAR(a->sigma_tr, b->sigma_tr, 1e-9);
        const auto ta = try_translate(box_yolo(), *a, kFrame, {});
        const auto tb = try_translate(box_yolo(), *b, kFrame, {});
        ASSERT_EQ(ta.has_value(), tb.has_value());
        if (!ta) continue;
        ++checked;
        EXPECT_NEAR(tb->box.xc - ta->box.xc, du / kFrame.width, 1e-12);
        EXPECT_NEAR(tb->box.yc - ta->box.yc, dv / kFrame.height, 1e-12);
        EXPECT_EQ(ta->box.w, tb->box.w);
    }
    EXPECT_GT(checked, 100);
}

TEST(Propagate, PermutationInvariance) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        MvFrame f = random_field(rng, kBox, 4, 10.0);
        const auto a = aggregate_grid(box_yolo(), f, kFrame, {});
        std::shuffle(f.vectors.begin(), f.vectors.end(), rng);
        const auto b = aggregate_grid(box_yolo(), f, kFrame, {});
        ASSERT_TRUE(a && b);
        EXPECT_EQ(a->mean_disp, b->mean_disp);
        EXPECT_EQ(a->sigma_tr, b->sigma_tr);
        EXPECT_EQ(a->nonempty, b->nonempty);
        EXPECT_EQ(a->mu_r, b->mu_r);
        EXPECT_EQ(a->sigma_r, b->sigma_r);
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                EXPECT_EQ(a->cells[r][c].count, b->cells[r][c].count);
                EXPECT_EQ(a->cells[r][c].mean, b->cells[r][c].mean);
                EXPECT_EQ(a->cells[r][c].scale_ratio, b->cells[r][c].scale_ratio);
            }
        }
    }
}

// Noiseless similarity field d = (s-1) g. r = s|g|/(|g|+eps), so
// s - s*eps/rho_min <= mu_r <= s; for s <= 1 this implies s - eps/rho_min <= mu_r.
TEST(Propagate, ScaleRecoveryBound) {
    for (double eps : {1e-3, 0.1, 1.0}) {
        MvpConfig cfg;
        cfg.epsilon = eps;
        for (double s : {0.8, 0.9, 0.98, 1.0, 1.02, 1.05, 1.1, 1.3}) {
            const auto f = cell_center_frame(kBox, [s](Vec2 g) { return Vec2{(s - 1) * g.x, (s - 1) * g.y}; });
            const auto stats = aggregate_grid(box_yolo(), f, kFrame, cfg);
            ASSERT_TRUE(stats && stats->mu_r);
            const double rho_min = 30.0;
            const double mu = *stats->mu_r;
            EXPECT_LE(mu, s + 1e-12) << "s=" << s << " eps=" << eps;
            EXPECT_GE(mu, s - s * eps / rho_min - 1e-12) << "s=" << s << " eps=" << eps;
            if (s <= 1.0) {
                EXPECT_GE(mu, s - eps / rho_min - 1e-12) << "s=" << s << " eps=" << eps;
            }
        }
    }
}

TEST(Propagate, Deterministic) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const MvFrame f = random_field(rng, kBox, 3, 6.0);
        const auto a = propagate_box(box_yolo(), f, kFrame, {});
        const auto b = propagate_box(box_yolo(), f, kFrame, {});
        EXPECT_EQ(a.index(), b.index());
        if (auto* t = std::get_if<Translated>(&a)) {
            EXPECT_EQ(t->box, std::get<Translated>(b).box);
        }
        if (auto* s = std::get_if<Scaled>(&a)) {
            EXPECT_EQ(s->box, std::get<Scaled>(b).box);
        }
    }
}

TEST(Propagate, NoGridIsGlobalTranslation) {
    MvpConfig cfg;
    cfg.grid_enabled = false;
    // Strong radial field: grid mode scales, single-cell mode can only translate.
    const auto radial = cell_center_frame(kBox, [](Vec2 g) { return Vec2{0.2 * g.x + 1, 0.2 * g.y}; });
    const auto out = propagate_box(box_yolo(), radial, kFrame, cfg);
    ASSERT_TRUE(std::holds_alternative<Translated>(out));
    const auto& t = std::get<Translated>(out);
    EXPECT_NEAR(t.box.xc, box_yolo().xc + 1.0 / kFrame.width, 1e-12);
    EXPECT_EQ(t.box.w, box_yolo().w);

    // Mean over all vectors, not over cells.
    MvFrame f{1, {past_vector(1, 105, 105, 0, 0), past_vector(1, 110, 110, 0, 0), past_vector(1, 180, 180, 3, 0)}};
    const auto g = propagate_box(box_yolo(), f, kFrame, cfg);
    ASSERT_TRUE(std::holds_alternative<Translated>(g));
    EXPECT_NEAR(std::get<Translated>(g).box.xc, box_yolo().xc + 1.0 / kFrame.width, 1e-12);

    EXPECT_TRUE(std::holds_alternative<Failed>(propagate_box(box_yolo(), MvFrame{1, {}}, kFrame, cfg)));
}

TEST(Propagate, ConfigValidation) {
    EXPECT_NO_THROW(MvpConfig{}.validate());
    EXPECT_EQ(MvpConfig{}.growth_ratio, 2.0);
    EXPECT_EQ(MvpConfig{}.growth_window, 10);
    auto bad = [](auto mutate) {
        MvpConfig c;
        mutate(c);
        EXPECT_THROW(c.validate(), SpecError);
    };
    bad([](MvpConfig& c) { c.tau_tr = 0; });
    bad([](MvpConfig& c) { c.tau_sc = -1; });
    bad([](MvpConfig& c) { c.epsilon = 0; });
    bad([](MvpConfig& c) { c.radius_floor = 0.0; });
    bad([](MvpConfig& c) { c.keyframe_interval = 0; });
    bad([](MvpConfig& c) { c.growth_ratio = 1.0; });
    bad([](MvpConfig& c) { c.growth_window = 0; });
    bad([](MvpConfig& c) { c.tau_cls = 1.0; });
    bad([](MvpConfig& c) { c.tau_cls = 0.0; });
    bad([](MvpConfig& c) { c.miss_limit = 0; });
}
