#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mvp/app.hpp"
#include "mvp/error.hpp"

namespace {

using mvp::app::RunConfig;

// Command-line overrides layered on top of an optional configuration file.
struct RunFlags {
    std::string config;
    std::optional<std::string> mode;
    std::optional<int> keyframe_interval;
    std::optional<double> tau_tr, tau_sc, epsilon, radius_floor, growth_ratio, tau_cls, min_area, score_floor;
    std::optional<int> growth_window, miss_limit, workers;
    bool no_grid = false;
    bool no_growth_check = false;
    bool no_single_class = false;
    std::optional<std::string> precomputed, bridge, synth, ground_truth, output_dir, future_vectors;
    std::vector<std::string> prompts;

    std::optional<std::string> video, mv_dump, frames_pattern;
    std::optional<int> width, height;
    std::optional<long long> frames;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("-c,--config", f.config, "Run configuration (JSON)");
    cmd->add_option("--mode", f.mode, "mvp | frozen | framewise");
    cmd->add_option("--keyframe-interval", f.keyframe_interval, "Detector every K frames");
    cmd->add_option("--tau-tr", f.tau_tr, "Translation threshold on sigma_tr (px)");
    cmd->add_option("--tau-sc", f.tau_sc, "Scale threshold on sigma_r");
    cmd->add_option("--epsilon", f.epsilon, "Scale-ratio denominator guard (px)");
    cmd->add_option("--radius-floor", f.radius_floor, "Minimum cell lever arm for scale statistics (px)");
    cmd->add_option("--growth-ratio", f.growth_ratio, "Area-growth factor that triggers re-detection");
    cmd->add_option("--growth-window", f.growth_window, "Frames after an anchor during which growth is checked");
    cmd->add_option("--tau-cls", f.tau_cls, "Score threshold of the single-class switch");
    cmd->add_option("--miss-limit", f.miss_limit, "Consecutive empty fallbacks before leaving single-class mode");
    cmd->add_option("--min-area", f.min_area, "Boxes below this pixel area are dropped");
    cmd->add_flag("--no-grid", f.no_grid, "Single-cell translation-only propagation");
    cmd->add_flag("--no-growth-check", f.no_growth_check, "Disable the area-growth fallback");
    cmd->add_flag("--no-single-class", f.no_single_class, "Always prompt with the full class list");
    cmd->add_option("--precomputed", f.precomputed, "Precomputed detection file (JSON lines)");
    cmd->add_option("--bridge", f.bridge, "Detector bridge command");
    cmd->add_option("--score-floor", f.score_floor, "Drop detections below this score");
    cmd->add_option("--prompts", f.prompts, "Class prompts")->delimiter(',');
    cmd->add_option("--synth", f.synth, "Synthetic scene file instead of inputs");
    cmd->add_option("--ground-truth", f.ground_truth, "Ground-truth file; enables metrics");
    cmd->add_option("-o,--output-dir", f.output_dir, "Output directory");
    cmd->add_option("-j,--workers", f.workers, "Parallel videos (default $MVP_WORKERS or 1)");
    cmd->add_option("--future-vectors", f.future_vectors, "drop | invert | keep");
    cmd->add_option("--video", f.video, "Single input: video name");
    cmd->add_option("--mv-dump", f.mv_dump, "Single input: motion-vector dump");
    cmd->add_option("--width", f.width, "Single input: frame width");
    cmd->add_option("--height", f.height, "Single input: frame height");
    cmd->add_option("--frames", f.frames, "Single input: frame count");
    cmd->add_option("--frames-pattern", f.frames_pattern, "Single input: printf pattern of frame images");
}

RunConfig resolve(const RunFlags& f) {
    RunConfig c;
    if (!f.config.empty()) {
        c = RunConfig::load(f.config);
    } else {
        c.workers = mvp::app::default_workers();
    }
    if (f.mode) c.mode = mvp::parse_run_mode(*f.mode);
    if (f.keyframe_interval) c.mvp.keyframe_interval = *f.keyframe_interval;
    if (f.tau_tr) c.mvp.tau_tr = *f.tau_tr;
    if (f.tau_sc) c.mvp.tau_sc = *f.tau_sc;
    if (f.epsilon) c.mvp.epsilon = *f.epsilon;
    if (f.radius_floor) c.mvp.radius_floor = *f.radius_floor;
    if (f.growth_ratio) c.mvp.growth_ratio = *f.growth_ratio;
    if (f.growth_window) c.mvp.growth_window = *f.growth_window;
    if (f.tau_cls) c.mvp.tau_cls = *f.tau_cls;
    if (f.miss_limit) c.mvp.miss_limit = *f.miss_limit;
    if (f.min_area) c.mvp.min_area = *f.min_area;
    if (f.no_grid) c.mvp.grid_enabled = false;
    if (f.no_growth_check) c.mvp.growth_check_enabled = false;
    if (f.no_single_class) c.mvp.single_class_enabled = false;
    if (f.precomputed) c.precomputed = *f.precomputed;
    if (f.bridge) c.bridge_command = *f.bridge;
    if (f.score_floor) c.detector.score_floor = *f.score_floor;
    if (!f.prompts.empty()) c.prompts = f.prompts;
    if (f.synth) c.synth = *f.synth;
    if (f.ground_truth) c.ground_truth = *f.ground_truth;
    if (f.output_dir) c.output_dir = *f.output_dir;
    if (f.workers) c.workers = *f.workers;
    if (f.future_vectors) c.future_vectors = mvp::app::parse_future_policy(*f.future_vectors);
    if (f.video) {
        mvp::app::InputSpec in;
        in.video = *f.video;
        in.mv_dump = f.mv_dump.value_or("");
        in.size = {f.width.value_or(0), f.height.value_or(0)};
        in.frames = f.frames.value_or(0);
        in.frames_pattern = f.frames_pattern.value_or("");
        c.inputs.push_back(std::move(in));
    }
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Keyframe detection with motion-vector box propagation"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "Run the pipeline (mvp, frozen or framewise) and write predictions");
    add_run_flags(run, run_flags);

    RunFlags ablate_flags;
    auto* ablate = app.add_subcommand("ablate", "Run the four ablation settings and compare them");
    add_run_flags(ablate, ablate_flags);

    std::string scene_path, synth_out = "synth";
    auto* synth = app.add_subcommand("synth", "Generate a synthetic scene");
    synth->add_option("scene", scene_path, "Scene specification (JSON)")->required();
    synth->add_option("-o,--output-dir", synth_out, "Output directory");

    mvp::app::EvalRequest eval_req;
    auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
    eval->add_option("--pred", eval_req.predictions, "Prediction file")->required();
    eval->add_option("--gt", eval_req.ground_truth, "Ground-truth file or annotation directory")->required();
    eval->add_flag("--vid", eval_req.vid_annotations, "Ground truth is an ILSVRC-VID annotation directory");
    eval->add_option("--run-log", eval_req.run_log, "Run log for FPS accounting");
    eval->add_flag("--class-agnostic", eval_req.options.class_agnostic, "Ignore labels when matching");
    eval->add_option("-o,--output", eval_req.output, "Write the metrics report here");

    mvp::app::ExtractRequest extract_req;
    auto* extract = app.add_subcommand("extract", "Export codec motion vectors of a video as a dump");
    extract->add_option("video", extract_req.video_path, "Input video")->required();
    extract->add_option("-o,--output", extract_req.output, "Dump file")->required();
    extract->add_option("--frames-dir", extract_req.frames_dir, "Also write decoded frames as JPEG here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const auto config = resolve(run_flags);
            const auto result = mvp::app::cmd_run(config);
            const auto summary = result.summary();
            std::cout << "frames: " << summary.frames << "  detector calls: " << summary.detector_calls << '\n';
            if (result.metrics) std::cout << result.metrics->to_table();
            std::cout << "outputs in " << config.output_dir << '\n';
        } else if (ablate->parsed()) {
            const auto config = resolve(ablate_flags);
            std::cout << mvp::app::ablation_table(mvp::app::cmd_ablate(config));
        } else if (synth->parsed()) {
            mvp::app::cmd_synth(scene_path, synth_out);
            std::cout << "scene written to " << synth_out << '\n';
        } else if (eval->parsed()) {
            std::cout << mvp::app::cmd_eval(eval_req).to_table();
        } else if (extract->parsed()) {
            std::cout << mvp::app::cmd_extract(extract_req).dump(2) << '\n';
        }
    } catch (const mvp::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
