#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvp/detector.hpp"
#include "mvp/evalkit.hpp"
#include "mvp/mvstream.hpp"
#include "mvp/propagate.hpp"
#include "mvp/scheduler.hpp"

namespace mvp::app {

struct InputSpec {
    std::string video;
    std::string mv_dump;
    FrameSize size;
    std::int64_t frames = 0;      // 0: infer from the precomputed detections
    std::string frames_pattern;   // printf pattern for image paths, e.g. "clip/%06d.jpg"
};

struct RunConfig {
    RunMode mode = RunMode::Mvp;
    MvpConfig mvp;
    DetectorOptions detector;
    std::string precomputed;      // detection file
    std::string bridge_command;   // live detector process
    std::vector<std::string> prompts;  // empty: labels found in the precomputed file
    std::vector<InputSpec> inputs;
    std::string synth;            // scene file, alternative to `inputs`
    std::string ground_truth;     // optional; enables metrics after the run
    std::string output_dir = "out";
    int workers = 1;
    FuturePolicy future_vectors = FuturePolicy::Drop;

    void validate() const;
    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::string& path);
};

FuturePolicy parse_future_policy(const std::string& name);
const char* future_policy_name(FuturePolicy policy);

// Default worker count: $MVP_WORKERS when set and positive, else 1.
int default_workers();

nlohmann::json mvp_config_to_json(const MvpConfig& cfg);
MvpConfig mvp_config_from_json(const nlohmann::json& j, MvpConfig base = {});

struct VideoResult {
    std::string video;
    VideoRun run;
};

struct RunResult {
    std::vector<VideoResult> videos;
    std::optional<eval::MetricsReport> metrics;

    std::vector<FrameDetections> predictions() const;
    eval::RunSummary summary() const;
};

/// Resolves inputs (generating the synthetic scene if requested), runs every
/// video through the scheduler and returns the results without writing files.
RunResult execute(const RunConfig& config);

/// `execute` plus outputs in `config.output_dir`: predictions.jsonl,
/// runlog.jsonl, config.json and, with ground truth, metrics.json.
RunResult cmd_run(const RunConfig& config);

struct AblationRow {
    std::string setting;
    std::string directory;
    bool grid = true;
    bool area_growth = true;
    bool single_class = true;
    eval::MetricsReport metrics;
    double fps = 0.0;
};

std::vector<AblationRow> cmd_ablate(const RunConfig& config);
std::string ablation_table(const std::vector<AblationRow>& rows);

void cmd_synth(const std::string& scene_path, const std::string& output_dir);

struct EvalRequest {
    std::string predictions;
    std::string ground_truth;
    bool vid_annotations = false;  // ground_truth names an ILSVRC-VID annotation directory
    std::string run_log;
    std::string output;            // metrics.json destination, optional
    eval::EvalOptions options;
};

eval::MetricsReport cmd_eval(const EvalRequest& request);

struct ExtractRequest {
    std::string video_path;
    std::string output;            // dump path
    std::string frames_dir;
};

nlohmann::json cmd_extract(const ExtractRequest& request);

}  // namespace mvp::app
