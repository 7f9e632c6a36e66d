#include "mvp/evalkit.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>

#include "mvp/error.hpp"

namespace mvp::eval {

using nlohmann::json;

double iou(const YoloBox& a, const YoloBox& b) {
    const double ax0 = a.xc - a.w / 2, ax1 = a.xc + a.w / 2, ay0 = a.yc - a.h / 2, ay1 = a.yc + a.h / 2;
    const double bx0 = b.xc - b.w / 2, bx1 = b.xc + b.w / 2, by0 = b.yc - b.h / 2, by1 = b.yc + b.h / 2;
    const double iw = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
    const double ih = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
    const double inter = iw * ih;
    const double uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0 ? inter / uni : 0.0;
}

std::vector<std::optional<std::size_t>> greedy_match(const std::vector<ScoredBox>& preds,
                                                     const std::vector<TruthBox>& truths, double threshold) {
    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });

    std::map<std::size_t, std::vector<std::size_t>> by_image;
    for (std::size_t g = 0; g < truths.size(); ++g) by_image[truths[g].image].push_back(g);

    std::vector<bool> taken(truths.size(), false);
    std::vector<std::optional<std::size_t>> match(preds.size());
    for (std::size_t p : order) {
        auto it = by_image.find(preds[p].image);
        if (it == by_image.end()) continue;
        std::optional<std::size_t> best;
        double best_iou = -1.0;
        for (std::size_t g : it->second) {
            if (taken[g]) continue;
            const double v = iou(preds[p].box, truths[g].box);
            if (v >= threshold && v > best_iou) {
                best = g;
                best_iou = v;
            }
        }
        if (best) {
            taken[*best] = true;
            match[p] = best;
        }
    }
    return match;
}

double interpolated_ap(const std::vector<bool>& tp, std::size_t num_truth) {
    if (num_truth == 0 || tp.empty()) return 0.0;
    const std::size_t n = tp.size();
    std::vector<double> precision(n), recall(n);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        hits += tp[i] ? 1 : 0;
        precision[i] = static_cast<double>(hits) / static_cast<double>(i + 1);
        recall[i] = static_cast<double>(hits) / static_cast<double>(num_truth);
    }
    for (std::size_t i = n - 1; i > 0; --i) precision[i - 1] = std::max(precision[i - 1], precision[i]);

    double sum = 0.0;
    std::size_t idx = 0;
    for (int k = 0; k <= 100; ++k) {
        const double r = k / 100.0;
        while (idx < n && recall[idx] < r) ++idx;
        if (idx == n) break;
        sum += precision[idx];
    }
    return sum / 101.0;
}

std::optional<double> average_precision(const std::vector<ScoredBox>& preds, const std::vector<TruthBox>& truths,
                                        double threshold) {
    if (truths.empty()) {
        if (preds.empty()) return std::nullopt;
        return 0.0;
    }
    const auto match = greedy_match(preds, truths, threshold);
    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
    std::vector<bool> tp;
    tp.reserve(order.size());
    for (std::size_t p : order) tp.push_back(match[p].has_value());
    return interpolated_ap(tp, truths.size());
}

std::vector<double> coco_thresholds() {
    std::vector<double> out;
    for (int k = 0; k < 10; ++k) out.push_back((50 + 5 * k) / 100.0);
    return out;
}

namespace {

using ImageKey = std::pair<std::string, std::int64_t>;

std::string class_of(const std::string& label, const EvalOptions& options) {
    return options.class_agnostic ? std::string("*") : label;
}

std::map<ImageKey, std::size_t> index_truth(const std::vector<GroundTruthFrame>& truths) {
    std::map<ImageKey, std::size_t> index;
    for (const auto& f : truths) {
        if (!index.emplace(ImageKey{f.video, f.frame}, index.size()).second) {
            throw EvalError("duplicate ground-truth entry for video '" + f.video + "' frame " +
                            std::to_string(f.frame));
        }
    }
    return index;
}

std::size_t image_of(const std::map<ImageKey, std::size_t>& index, const FrameDetections& f) {
    auto it = index.find({f.video, f.frame});
    if (it == index.end()) {
        throw EvalError("prediction for video '" + f.video + "' frame " + std::to_string(f.frame) +
                        " has no ground-truth entry");
    }
    return it->second;
}

ClassAp class_metrics(const std::vector<ScoredBox>& preds, const std::vector<TruthBox>& truths) {
    ClassAp c;
    c.truths = truths.size();
    c.predictions = preds.size();
    c.ap20 = average_precision(preds, truths, 0.2).value_or(0.0);
    c.ap30 = average_precision(preds, truths, 0.3).value_or(0.0);
    c.ap50 = average_precision(preds, truths, 0.5).value_or(0.0);
    double sum = 0.0;
    const auto thresholds = coco_thresholds();
    for (double thr : thresholds) sum += average_precision(preds, truths, thr).value_or(0.0);
    c.ap50_95 = sum / static_cast<double>(thresholds.size());
    return c;
}

}  // namespace

double mean_best_iou(const std::vector<FrameDetections>& preds, const std::vector<GroundTruthFrame>& truths,
                     const EvalOptions& options) {
    const auto index = index_truth(truths);
    std::vector<std::vector<const Detection*>> per_image(truths.size());
    for (const auto& f : preds) {
        const std::size_t img = image_of(index, f);
        for (const auto& d : f.detections) per_image[img].push_back(&d);
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t img = 0; img < truths.size(); ++img) {
        for (const auto& t : truths[img].boxes) {
            double best = 0.0;
            for (const Detection* d : per_image[img]) {
                if (class_of(d->label, options) == class_of(t.label, options)) best = std::max(best, iou(d->box, t.box));
            }
            sum += best;
            ++count;
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

MetricsReport evaluate(const std::vector<FrameDetections>& preds, const std::vector<GroundTruthFrame>& truths,
                       const EvalOptions& options, const std::optional<RunSummary>& run) {
    const auto index = index_truth(truths);
    std::map<std::string, std::pair<std::vector<ScoredBox>, std::vector<TruthBox>>> classes;
    for (std::size_t img = 0; img < truths.size(); ++img) {
        for (const auto& t : truths[img].boxes) classes[class_of(t.label, options)].second.push_back({img, t.box});
    }
    for (const auto& f : preds) {
        const std::size_t img = image_of(index, f);
        for (const auto& d : f.detections) {
            // Classes absent from the ground truth do not enter the mean.
            auto it = classes.find(class_of(d.label, options));
            if (it != classes.end()) it->second.first.push_back({img, d.box, d.score});
        }
    }

    std::vector<std::pair<std::string, std::future<ClassAp>>> jobs;
    for (const auto& [label, data] : classes) {
        jobs.emplace_back(label, std::async(std::launch::async, [&data = data] {
                              return class_metrics(data.first, data.second);
                          }));
    }

    MetricsReport report;
    for (auto& [label, job] : jobs) report.per_class[label] = job.get();
    if (!report.per_class.empty()) {
        const double n = static_cast<double>(report.per_class.size());
        for (const auto& [_, c] : report.per_class) {
            report.map20 += c.ap20 / n;
            report.map30 += c.ap30 / n;
            report.map50 += c.ap50 / n;
            report.map50_95 += c.ap50_95 / n;
        }
    }
    report.mean_iou = mean_best_iou(preds, truths, options);
    if (run) {
        report.detector_calls = run->detector_calls;
        if (run->wall_ms > 0) report.fps = static_cast<double>(run->frames) / (run->wall_ms / 1000.0);
    }
    return report;
}

json MetricsReport::to_json() const {
    json classes = json::object();
    for (const auto& [label, c] : per_class) {
        classes[label] = {{"ap@0.2", c.ap20},          {"ap@0.3", c.ap30},         {"ap@0.5", c.ap50},
                          {"ap@[0.5:0.95]", c.ap50_95}, {"truths", c.truths}, {"predictions", c.predictions}};
    }
    json j{{"mAP@0.2", map20},
           {"mAP@0.3", map30},
           {"mAP@0.5", map50},
           {"mAP@[0.5:0.95]", map50_95},
           {"mean_iou", mean_iou},
           {"per_class", classes}};
    j["fps"] = fps ? json(*fps) : json(nullptr);
    j["detector_calls"] = detector_calls ? json(*detector_calls) : json(nullptr);
    return j;
}

std::string MetricsReport::to_table() const {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-20s %8s %8s %8s %14s\n", "class", "AP@0.2", "AP@0.3", "AP@0.5",
                  "AP@[0.5:0.95]");
    out << line;
    for (const auto& [label, c] : per_class) {
        std::snprintf(line, sizeof line, "%-20s %8.3f %8.3f %8.3f %14.3f\n", label.c_str(), c.ap20, c.ap30, c.ap50,
                      c.ap50_95);
        out << line;
    }
    std::snprintf(line, sizeof line, "%-20s %8.3f %8.3f %8.3f %14.3f\n", "mAP", map20, map30, map50, map50_95);
    out << line;
    std::snprintf(line, sizeof line, "mean IoU: %.4f\n", mean_iou);
    out << line;
    if (fps) {
        std::snprintf(line, sizeof line, "FPS: %.2f\n", *fps);
        out << line;
    }
    if (detector_calls) out << "detector calls: " << *detector_calls << '\n';
    return out.str();
}

RunSummary read_run_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open run log '" + path + "'");
    RunSummary s;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(raw);
            ++s.frames;
            if (j.at("detector_called").get<bool>()) ++s.detector_calls;
            s.wall_ms += j.at("wall_ms").get<double>();
        } catch (const json::exception& e) {
            throw ParseError(e.what(), line);
        }
    }
    return s;
}

}  // namespace mvp::eval
