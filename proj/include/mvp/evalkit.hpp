#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvp/geometry.hpp"
#include "mvp/records.hpp"

namespace mvp::eval {

double iou(const YoloBox& a, const YoloBox& b);

struct ScoredBox {
    std::size_t image = 0;
    YoloBox box;
    double score = 0.0;
};

struct TruthBox {
    std::size_t image = 0;
    YoloBox box;
};

/// Greedy matching for one class: predictions in descending score order (ties
/// keep input order) each take the highest-IoU unmatched ground truth of their
/// image with IoU >= `threshold`; equal IoUs go to the lowest truth index.
/// Returns, per prediction in input order, the matched truth index or nullopt.
std::vector<std::optional<std::size_t>> greedy_match(const std::vector<ScoredBox>& preds,
                                                     const std::vector<TruthBox>& truths, double threshold);

/// 101-point interpolated AP from true-positive flags listed in descending
/// score order.
double interpolated_ap(const std::vector<bool>& tp_in_rank_order, std::size_t num_truth);

/// nullopt when there is neither truth nor prediction (class undefined).
std::optional<double> average_precision(const std::vector<ScoredBox>& preds, const std::vector<TruthBox>& truths,
                                        double threshold);

// 0.50, 0.55, ..., 0.95
std::vector<double> coco_thresholds();

struct ClassAp {
    double ap20 = 0.0;
    double ap30 = 0.0;
    double ap50 = 0.0;
    double ap50_95 = 0.0;
    std::size_t truths = 0;
    std::size_t predictions = 0;
};

struct RunSummary {
    std::size_t frames = 0;
    std::size_t detector_calls = 0;
    double wall_ms = 0.0;
};

struct MetricsReport {
    double map20 = 0.0;
    double map30 = 0.0;
    double map50 = 0.0;
    double map50_95 = 0.0;
    double mean_iou = 0.0;
    std::map<std::string, ClassAp> per_class;
    std::optional<double> fps;
    std::optional<std::size_t> detector_calls;

    nlohmann::json to_json() const;
    std::string to_table() const;
};

struct EvalOptions {
    bool class_agnostic = false;
};

/// Mean over every truth box of the best same-label IoU in its frame.
double mean_best_iou(const std::vector<FrameDetections>& preds, const std::vector<GroundTruthFrame>& truths,
                     const EvalOptions& options = {});

MetricsReport evaluate(const std::vector<FrameDetections>& preds, const std::vector<GroundTruthFrame>& truths,
                       const EvalOptions& options = {}, const std::optional<RunSummary>& run = std::nullopt);

RunSummary read_run_log(const std::string& path);

/// Imports ILSVRC-VID style per-frame XML annotations. `root` is either one
/// video directory of `<frame>.xml` files or a directory of such videos.
std::vector<GroundTruthFrame> import_vid_annotations(const std::string& root);

}  // namespace mvp::eval
