#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>

#include "mvp/geometry.hpp"
#include "mvp/mvstream.hpp"

namespace mvp {

/// Tunables for propagation, fallback and the single-class switch.
///
/// The growth constants (2x area within 10 frames) are the published ones.
/// The statistical thresholds have no published values; the defaults below are
/// ours and every field is overridable from the command line.
struct MvpConfig {
    double tau_tr = 4.0;        // px, translation-coherence threshold on sigma_tr
    double tau_sc = 0.1;        // scale-ratio spread threshold on sigma_r
    double epsilon = 1e-3;      // px, denominator guard in the scale ratio
    // px; cells whose lever arm is shorter are left out of scale statistics.
    // Unset means 0.1 x the cell half-diagonal of the box being propagated.
    std::optional<double> radius_floor;
    int keyframe_interval = 30;
    double growth_ratio = 2.0;
    int growth_window = 10;
    double tau_cls = 0.5;
    int miss_limit = 3;
    double min_area = 1.0;      // px^2
    bool grid_enabled = true;
    bool growth_check_enabled = true;
    bool single_class_enabled = true;

    // Throws SpecError when an invariant is violated.
    void validate() const;
};

struct CellStats {
    int count = 0;
    Vec2 mean;                          // valid when count > 0
    Vec2 offset;                        // cell center relative to box center, px
    std::optional<double> scale_ratio;  // set for scale-eligible cells
};

struct GridStats {
    std::array<std::array<CellStats, 3>, 3> cells{};  // [row][col]
    int nonempty = 0;
    Vec2 mean_disp;
    double sigma_tr = 0.0;
    int scale_cells = 0;
    std::optional<double> mu_r;
    std::optional<double> sigma_r;
};

struct Translated {
    YoloBox box;
};
struct Scaled {
    YoloBox box;
    double mu_r = 1.0;
};
struct Failed {
    std::string reason;
};
using PropagationOutcome = std::variant<Translated, Scaled, Failed>;

/// 3x3 aggregation of past-reference vectors whose source centers lie in the
/// box's pixel support. Returns nullopt when every cell is empty.
std::optional<GridStats> aggregate_grid(const YoloBox& prev_box, const MvFrame& frame, FrameSize size,
                                        const MvpConfig& cfg);

std::optional<Translated> try_translate(const YoloBox& prev_box, const GridStats& stats, FrameSize size,
                                        const MvpConfig& cfg);

// Caller must have tried (and rejected) translation first.
std::optional<Scaled> try_scale(const YoloBox& prev_box, const GridStats& stats, FrameSize size,
                                const MvpConfig& cfg);

PropagationOutcome propagate_box(const YoloBox& prev_box, const MvFrame& frame, FrameSize size,
                                 const MvpConfig& cfg);

const char* outcome_name(const PropagationOutcome& outcome);

}  // namespace mvp
