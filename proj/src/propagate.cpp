#include "mvp/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mvp/error.hpp"

namespace mvp {
namespace {

double norm(Vec2 v) { return std::hypot(v.x, v.y); }

// Order-independent mean: sums run over a sorted copy so permuting the input
// vectors yields bit-identical statistics.
Vec2 stable_mean(std::vector<Vec2>& values) {
    std::sort(values.begin(), values.end(),
              [](const Vec2& a, const Vec2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    Vec2 sum;
    for (const auto& v : values) {
        sum.x += v.x;
        sum.y += v.y;
    }
    const double n = static_cast<double>(values.size());
    return {sum.x / n, sum.y / n};
}

bool inside(const MotionVector& mv, const PixelBox& px) {
    return mv.src_x >= px.x_min && mv.src_x < px.x_max && mv.src_y >= px.y_min && mv.src_y < px.y_max;
}

YoloBox shifted(const YoloBox& box, Vec2 d, FrameSize size) {
    return {box.xc + d.x / size.width, box.yc + d.y / size.height, box.w, box.h};
}

PropagationOutcome propagate_single_cell(const YoloBox& prev_box, const MvFrame& frame, FrameSize size) {
    const PixelBox px = to_pixel(prev_box, size);
    std::vector<Vec2> disp;
    for (const auto& mv : frame.vectors) {
        if (mv.direction == MvDirection::Past && inside(mv, px)) disp.push_back(mv.displacement());
    }
    if (disp.empty()) return Failed{"no motion vectors inside box"};
    return Translated{shifted(prev_box, stable_mean(disp), size)};
}

}  // namespace

void MvpConfig::validate() const {
    auto fail = [](const std::string& what) { throw SpecError("invalid configuration: " + what); };
    if (!(tau_tr > 0)) fail("tau_tr must be > 0");
    if (!(tau_sc > 0)) fail("tau_sc must be > 0");
    if (!(epsilon > 0)) fail("epsilon must be > 0");
    if (radius_floor && !(*radius_floor > 0)) fail("radius_floor must be > 0");
    if (keyframe_interval < 1) fail("keyframe_interval must be >= 1");
    if (!(growth_ratio > 1)) fail("growth_ratio must be > 1");
    if (growth_window < 1) fail("growth_window must be >= 1");
    if (!(tau_cls > 0 && tau_cls < 1)) fail("tau_cls must be in (0,1)");
    if (miss_limit < 1) fail("miss_limit must be >= 1");
    if (!(min_area > 0)) fail("min_area must be > 0");
}

std::optional<GridStats> aggregate_grid(const YoloBox& prev_box, const MvFrame& frame, FrameSize size,
                                        const MvpConfig& cfg) {
    const PixelBox px = to_pixel(prev_box, size);
    const double cell_w = px.width() / 3.0;
    const double cell_h = px.height() / 3.0;
    if (!(cell_w > 0) || !(cell_h > 0)) return std::nullopt;

    std::array<std::array<std::vector<Vec2>, 3>, 3> buckets;
    for (const auto& mv : frame.vectors) {
        if (mv.direction != MvDirection::Past || !inside(mv, px)) continue;
        const int col = std::clamp(static_cast<int>(std::floor((mv.src_x - px.x_min) / cell_w)), 0, 2);
        const int row = std::clamp(static_cast<int>(std::floor((mv.src_y - px.y_min) / cell_h)), 0, 2);
        buckets[row][col].push_back(mv.displacement());
    }

    GridStats stats;
    Vec2 sum;
    for (int row = 0; row < 3; ++row) {
        for (int col = 0; col < 3; ++col) {
            CellStats& cell = stats.cells[row][col];
            cell.offset = {(col - 1) * cell_w, (row - 1) * cell_h};
            cell.count = static_cast<int>(buckets[row][col].size());
            if (cell.count == 0) continue;
            cell.mean = stable_mean(buckets[row][col]);
            sum.x += cell.mean.x;
            sum.y += cell.mean.y;
            ++stats.nonempty;
        }
    }
    if (stats.nonempty == 0) return std::nullopt;

    const double n = stats.nonempty;
    stats.mean_disp = {sum.x / n, sum.y / n};
    double sq = 0.0;
    for (const auto& row : stats.cells) {
        for (const auto& cell : row) {
            if (cell.count == 0) continue;
            const double dx = cell.mean.x - stats.mean_disp.x;
            const double dy = cell.mean.y - stats.mean_disp.y;
            sq += dx * dx + dy * dy;
        }
    }
    stats.sigma_tr = std::sqrt(sq / n);

    const double floor = cfg.radius_floor.value_or(0.1 * 0.5 * std::hypot(cell_w, cell_h));
    double r_sum = 0.0;
    for (auto& row : stats.cells) {
        for (auto& cell : row) {
            const double lever = norm(cell.offset);
            if (cell.count == 0 || lever < floor) continue;
            const Vec2 moved{cell.offset.x + cell.mean.x, cell.offset.y + cell.mean.y};
            cell.scale_ratio = norm(moved) / (lever + cfg.epsilon);
            r_sum += *cell.scale_ratio;
            ++stats.scale_cells;
        }
    }
    if (stats.scale_cells > 0) {
        const double mu = r_sum / stats.scale_cells;
        double var = 0.0;
        for (const auto& row : stats.cells) {
            for (const auto& cell : row) {
                if (cell.scale_ratio) var += (*cell.scale_ratio - mu) * (*cell.scale_ratio - mu);
            }
        }
        stats.mu_r = mu;
        stats.sigma_r = std::sqrt(var / stats.scale_cells);
    }
    return stats;
}

std::optional<Translated> try_translate(const YoloBox& prev_box, const GridStats& stats, FrameSize size,
                                        const MvpConfig& cfg) {
    if (!(stats.sigma_tr <= cfg.tau_tr)) return std::nullopt;
    return Translated{shifted(prev_box, stats.mean_disp, size)};
}

std::optional<Scaled> try_scale(const YoloBox& prev_box, const GridStats& stats, FrameSize size,
                                const MvpConfig& cfg) {
    if (!stats.mu_r || !stats.sigma_r || !(*stats.sigma_r <= cfg.tau_sc)) return std::nullopt;
    YoloBox box = shifted(prev_box, stats.mean_disp, size);
    box.w *= *stats.mu_r;
    box.h *= *stats.mu_r;
    return Scaled{box, *stats.mu_r};
}

PropagationOutcome propagate_box(const YoloBox& prev_box, const MvFrame& frame, FrameSize size,
                                 const MvpConfig& cfg) {
    if (!cfg.grid_enabled) return propagate_single_cell(prev_box, frame, size);

    const auto stats = aggregate_grid(prev_box, frame, size, cfg);
    if (!stats) return Failed{"no motion vectors inside box"};
    if (auto t = try_translate(prev_box, *stats, size, cfg)) return *t;
    if (auto s = try_scale(prev_box, *stats, size, cfg)) return *s;
    return Failed{stats->scale_cells == 0 ? "incoherent translation, no scale-eligible cells"
                                          : "incoherent translation and scale"};
}

const char* outcome_name(const PropagationOutcome& outcome) {
    switch (outcome.index()) {
        case 0: return "translated";
        case 1: return "scaled";
        default: return "failed";
    }
}

}  // namespace mvp
