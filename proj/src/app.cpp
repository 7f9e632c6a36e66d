#include "mvp/app.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

#include "mvp/error.hpp"
#include "mvp/extract.hpp"
#include "mvp/records.hpp"
#include "mvp/synth.hpp"

namespace mvp::app {

using nlohmann::json;
namespace fs = std::filesystem;

int default_workers() {
    if (const char* env = std::getenv("MVP_WORKERS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
    }
    return 1;
}

json mvp_config_to_json(const MvpConfig& cfg) {
    json j{{"tau_tr", cfg.tau_tr},
           {"tau_sc", cfg.tau_sc},
           {"epsilon", cfg.epsilon},
           {"keyframe_interval", cfg.keyframe_interval},
           {"growth_ratio", cfg.growth_ratio},
           {"growth_window", cfg.growth_window},
           {"tau_cls", cfg.tau_cls},
           {"miss_limit", cfg.miss_limit},
           {"min_area", cfg.min_area},
           {"grid_enabled", cfg.grid_enabled},
           {"growth_check_enabled", cfg.growth_check_enabled},
           {"single_class_enabled", cfg.single_class_enabled}};
    j["radius_floor"] = cfg.radius_floor ? json(*cfg.radius_floor) : json(nullptr);
    return j;
}

MvpConfig mvp_config_from_json(const json& j, MvpConfig cfg) {
    cfg.tau_tr = j.value("tau_tr", cfg.tau_tr);
    cfg.tau_sc = j.value("tau_sc", cfg.tau_sc);
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    if (j.contains("radius_floor")) {
        if (j["radius_floor"].is_null()) {
            cfg.radius_floor.reset();
        } else {
            cfg.radius_floor = j["radius_floor"].get<double>();
        }
    }
    cfg.keyframe_interval = j.value("keyframe_interval", cfg.keyframe_interval);
    cfg.growth_ratio = j.value("growth_ratio", cfg.growth_ratio);
    cfg.growth_window = j.value("growth_window", cfg.growth_window);
    cfg.tau_cls = j.value("tau_cls", cfg.tau_cls);
    cfg.miss_limit = j.value("miss_limit", cfg.miss_limit);
    cfg.min_area = j.value("min_area", cfg.min_area);
    cfg.grid_enabled = j.value("grid_enabled", cfg.grid_enabled);
    cfg.growth_check_enabled = j.value("growth_check_enabled", cfg.growth_check_enabled);
    cfg.single_class_enabled = j.value("single_class_enabled", cfg.single_class_enabled);
    return cfg;
}

const char* future_policy_name(FuturePolicy p) {
    switch (p) {
        case FuturePolicy::Drop: return "drop";
        case FuturePolicy::Invert: return "invert";
        case FuturePolicy::Keep: return "keep";
    }
    return "?";
}

FuturePolicy parse_future_policy(const std::string& s) {
    if (s == "drop") return FuturePolicy::Drop;
    if (s == "invert") return FuturePolicy::Invert;
    if (s == "keep") return FuturePolicy::Keep;
    throw InputError("unknown future_vectors policy '" + s + "' (expected drop, invert or keep)");
}

void RunConfig::validate() const {
    mvp.validate();
    if (!precomputed.empty() && !bridge_command.empty()) {
        throw InputError("configure exactly one detector source (precomputed or bridge), not both");
    }
    if (precomputed.empty() && bridge_command.empty() && synth.empty()) {
        throw InputError("no detector source configured");
    }
    if (!synth.empty() && !inputs.empty()) throw InputError("configure either inputs or a synth scene, not both");
    if (synth.empty() && inputs.empty()) throw InputError("no inputs configured");
    if (!bridge_command.empty() && prompts.empty()) throw InputError("bridge detection needs an explicit prompt list");
    if (workers < 1) throw InputError("workers must be >= 1");
    if (!(detector.score_floor >= 0.0 && detector.score_floor < 1.0)) throw InputError("score_floor must be in [0,1)");
    std::set<std::string> names;
    for (const auto& in : inputs) {
        if (in.video.empty()) throw InputError("input without a video name");
        if (!names.insert(in.video).second) throw InputError("duplicate input video '" + in.video + "'");
        if (in.size.width <= 0 || in.size.height <= 0) {
            throw InputError("input '" + in.video + "' needs a positive width and height");
        }
        if (mode == RunMode::Mvp && in.mv_dump.empty()) {
            throw InputError("input '" + in.video + "' has no motion-vector dump");
        }
    }
}

json RunConfig::to_json() const {
    json ins = json::array();
    for (const auto& in : inputs) {
        ins.push_back({{"video", in.video},
                       {"mv_dump", in.mv_dump},
                       {"width", in.size.width},
                       {"height", in.size.height},
                       {"frames", in.frames},
                       {"frames_pattern", in.frames_pattern}});
    }
    return {{"mode", run_mode_name(mode)},
            {"mvp", mvp_config_to_json(mvp)},
            {"detector",
             {{"precomputed", precomputed},
              {"bridge", bridge_command},
              {"score_floor", detector.score_floor},
              {"timeout_ms", detector.timeout.count()}}},
            {"prompts", prompts},
            {"inputs", ins},
            {"synth", synth},
            {"ground_truth", ground_truth},
            {"output_dir", output_dir},
            {"workers", workers},
            {"future_vectors", future_policy_name(future_vectors)}};
}

RunConfig RunConfig::from_json(const json& j) {
    try {
        RunConfig c;
        c.workers = default_workers();
        c.mode = parse_run_mode(j.value("mode", std::string("mvp")));
        if (j.contains("mvp")) c.mvp = mvp_config_from_json(j["mvp"]);
        if (j.contains("detector")) {
            const auto& d = j["detector"];
            c.precomputed = d.value("precomputed", std::string{});
            c.bridge_command = d.value("bridge", std::string{});
            c.detector.score_floor = d.value("score_floor", c.detector.score_floor);
            c.detector.timeout = std::chrono::milliseconds(d.value("timeout_ms", c.detector.timeout.count()));
        }
        c.prompts = j.value("prompts", std::vector<std::string>{});
        if (j.contains("inputs")) {
            for (const auto& in : j["inputs"]) {
                InputSpec s;
                s.video = in.at("video").get<std::string>();
                s.mv_dump = in.value("mv_dump", std::string{});
                s.size = {in.at("width").get<int>(), in.at("height").get<int>()};
                s.frames = in.value("frames", std::int64_t{0});
                s.frames_pattern = in.value("frames_pattern", std::string{});
                c.inputs.push_back(std::move(s));
            }
        }
        c.synth = j.value("synth", std::string{});
        c.ground_truth = j.value("ground_truth", std::string{});
        c.output_dir = j.value("output_dir", c.output_dir);
        c.workers = j.value("workers", c.workers);
        c.future_vectors = parse_future_policy(j.value("future_vectors", std::string("drop")));
        return c;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed run configuration: ") + e.what());
    }
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open configuration '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("configuration '" + path + "': " + e.what());
    }
    RunConfig c = from_json(j);
    // Relative paths in the file resolve against the file's directory.
    const fs::path base = fs::path(path).parent_path();
    auto resolve = [&](std::string& p) {
        if (!p.empty() && fs::path(p).is_relative()) p = (base / p).string();
    };
    resolve(c.precomputed);
    resolve(c.synth);
    resolve(c.ground_truth);
    for (auto& in : c.inputs) {
        resolve(in.mv_dump);
        resolve(in.frames_pattern);
    }
    return c;
}

std::vector<FrameDetections> RunResult::predictions() const {
    std::vector<FrameDetections> out;
    for (const auto& v : videos) out.insert(out.end(), v.run.frames.begin(), v.run.frames.end());
    return out;
}

eval::RunSummary RunResult::summary() const {
    eval::RunSummary s;
    for (const auto& v : videos) {
        s.frames += v.run.frames.size();
        s.detector_calls += v.run.detector_calls();
        s.wall_ms += v.run.wall_ms();
    }
    return s;
}

namespace {

struct Job {
    VideoInput input;
};

struct Prepared {
    std::vector<Job> jobs;
    std::vector<std::string> prompts;
    std::shared_ptr<const DetectionStore> store;
    std::optional<std::vector<GroundTruthFrame>> truth;
    std::optional<synth::Scene> scene;
    std::optional<synth::SceneSpec> spec;
};

std::function<std::string(std::int64_t)> image_namer(const std::string& video, const std::string& pattern) {
    if (pattern.empty()) {
        return [video](std::int64_t t) { return video + "/" + std::to_string(t); };
    }
    return [pattern](std::int64_t t) {
        std::vector<char> buf(pattern.size() + 64);
        std::snprintf(buf.data(), buf.size(), pattern.c_str(), static_cast<long long>(t));
        return std::string(buf.data());
    };
}

Prepared prepare(const RunConfig& config) {
    config.validate();
    Prepared p;
    if (!config.synth.empty()) {
        p.spec = synth::read_scene_file(config.synth);
        p.scene = synth::generate(*p.spec);
        p.truth = p.scene->truth;
        Job job;
        job.input.video = p.spec->video;
        job.input.size = p.spec->size;
        job.input.frame_count = p.spec->frames;
        // The scene's vectors are already past-reference only.
        job.input.motion = MvStream(p.scene->motion);
        job.input.image_ref = image_namer(p.spec->video, "");
        p.jobs.push_back(std::move(job));
        if (config.precomputed.empty() && config.bridge_command.empty()) {
            p.store = std::make_shared<const DetectionStore>(p.scene->detections);
        }
    }
    if (!config.precomputed.empty()) p.store = DetectionStore::load(config.precomputed);
    if (!config.ground_truth.empty()) p.truth = read_ground_truth_file(config.ground_truth);

    for (const auto& in : config.inputs) {
        Job job;
        job.input.video = in.video;
        job.input.size = in.size;
        job.input.frame_count = in.frames;
        if (job.input.frame_count == 0 && p.store) job.input.frame_count = p.store->frame_span(in.video);
        if (job.input.frame_count <= 0) {
            throw InputError("input '" + in.video + "': frame count unknown (set \"frames\")");
        }
        if (!in.mv_dump.empty()) {
            if (!fs::exists(in.mv_dump)) throw InputError("motion-vector dump '" + in.mv_dump + "' not found");
            job.input.motion = MvStream(read_mv_dump(in.mv_dump, config.future_vectors));
        }
        job.input.image_ref = image_namer(in.video, in.frames_pattern);
        p.jobs.push_back(std::move(job));
    }

    p.prompts = config.prompts;
    if (p.prompts.empty() && p.store) {
        std::set<std::string> labels;
        for (const auto& v : p.store->videos()) {
            for (auto& l : p.store->labels(v)) labels.insert(std::move(l));
        }
        p.prompts.assign(labels.begin(), labels.end());
    }
    if (p.prompts.empty()) throw InputError("no prompts: configure \"prompts\" or provide labelled detections");
    return p;
}

std::vector<VideoResult> run_jobs(const Prepared& p, const RunConfig& config, const MvpConfig& cfg, RunMode mode) {
    const std::size_t n = p.jobs.size();
    std::vector<VideoResult> results(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex report;

    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            const auto& input = p.jobs[i].input;
            try {
                std::unique_ptr<Detector> detector;
                if (!config.bridge_command.empty()) {
                    detector = std::make_unique<BridgeDetector>(config.bridge_command, config.detector);
                } else {
                    detector = std::make_unique<PrecomputedDetector>(p.store, input.video, config.detector);
                }
                results[i] = {input.video, run_video(input, *detector, p.prompts, cfg, mode)};
            } catch (...) {
                errors[i] = std::current_exception();
            }
            const std::size_t finished = ++done;
            if (n > 1) {
                std::lock_guard lock(report);
                std::cerr << "[" << finished << "/" << n << "] " << input.video << '\n';
            }
        }
    };

    const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(config.workers));
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

RunResult run_prepared(const Prepared& p, const RunConfig& config, const MvpConfig& cfg, RunMode mode) {
    RunResult result;
    result.videos = run_jobs(p, config, cfg, mode);
    if (p.truth) result.metrics = eval::evaluate(result.predictions(), *p.truth, {}, result.summary());
    return result;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

void write_run_outputs(const fs::path& dir, const RunResult& result) {
    fs::create_directories(dir);
    const auto preds = result.predictions();
    write_detection_file((dir / "predictions.jsonl").string(), preds);
    std::ofstream log(dir / "runlog.jsonl");
    if (!log) throw InputError("cannot write run log in '" + dir.string() + "'");
    for (const auto& v : result.videos) {
        for (const auto& l : v.run.log) log << l.to_json().dump() << '\n';
    }
    if (result.metrics) {
        write_json(dir / "metrics.json", result.metrics->to_json());
        std::ofstream(dir / "metrics.txt") << result.metrics->to_table();
    }
}

// Config as written next to the outputs: paths made absolute so the echo can be
// re-run from anywhere.
json echoed(const RunConfig& config) {
    RunConfig c = config;
    auto abs = [](std::string& p) {
        if (!p.empty()) p = fs::absolute(p).lexically_normal().string();
    };
    abs(c.precomputed);
    abs(c.synth);
    abs(c.ground_truth);
    abs(c.output_dir);
    for (auto& in : c.inputs) {
        abs(in.mv_dump);
        abs(in.frames_pattern);
    }
    return c.to_json();
}

void write_scene(const fs::path& dir, const synth::SceneSpec& spec, const synth::Scene& scene) {
    fs::create_directories(dir);
    write_json(dir / "scene.json", synth::scene_to_json(spec));
    write_mv_dump((dir / (spec.video + ".mv.csv")).string(), scene.motion);
    write_ground_truth_file((dir / "truth.jsonl").string(), scene.truth);
    write_detection_file((dir / "detections.jsonl").string(), scene.detections);
}

}  // namespace

RunResult execute(const RunConfig& config) {
    const Prepared p = prepare(config);
    return run_prepared(p, config, config.mvp, config.mode);
}

RunResult cmd_run(const RunConfig& config) {
    const Prepared p = prepare(config);
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    write_json(dir / "config.json", echoed(config));
    if (p.scene) write_scene(dir / "synth", *p.spec, *p.scene);
    RunResult result = run_prepared(p, config, config.mvp, config.mode);
    write_run_outputs(dir, result);
    return result;
}

std::vector<AblationRow> cmd_ablate(const RunConfig& config) {
    const Prepared p = prepare(config);
    if (!p.truth) throw InputError("ablation needs ground truth (a synth scene or \"ground_truth\")");
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    write_json(dir / "config.json", echoed(config));

    std::vector<AblationRow> rows{
        {"w/o Single-class check", "no_single_class", true, true, false, {}, 0.0},
        {"w/o Area-growth check", "no_area_growth", true, false, true, {}, 0.0},
        {"w/o 3x3 Grid MV", "no_grid", false, true, true, {}, 0.0},
        {"MVP (full)", "full", true, true, true, {}, 0.0},
    };
    for (auto& row : rows) {
        MvpConfig cfg = config.mvp;
        cfg.grid_enabled = row.grid;
        cfg.growth_check_enabled = row.area_growth;
        cfg.single_class_enabled = row.single_class;
        RunResult result = run_prepared(p, config, cfg, RunMode::Mvp);
        write_run_outputs(dir / row.directory, result);
        row.metrics = *result.metrics;
        row.fps = row.metrics.fps.value_or(0.0);
    }

    json table = json::array();
    for (const auto& row : rows) {
        json r = row.metrics.to_json();
        r["setting"] = row.setting;
        r["directory"] = row.directory;
        r["grid"] = row.grid;
        r["area_growth"] = row.area_growth;
        r["single_class"] = row.single_class;
        table.push_back(std::move(r));
    }
    write_json(dir / "ablation.json", table);
    std::ofstream(dir / "ablation.txt") << ablation_table(rows);
    return rows;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
    std::string out;
    char line[320];
    std::snprintf(line, sizeof line, "%-24s %-11s %-11s %-12s %8s %8s %8s %14s %9s %8s\n", "Setting", "3x3 Grid MV",
                  "Area-growth", "Single-class", "mAP@0.2", "mAP@0.3", "mAP@0.5", "mAP@[0.5:0.95]", "FPS", "mIoU");
    out += line;
    auto mark = [](bool on) { return on ? "yes" : "no"; };
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-24s %-11s %-11s %-12s %8.3f %8.3f %8.3f %14.3f %9.1f %8.4f\n",
                      r.setting.c_str(), mark(r.grid), mark(r.area_growth), mark(r.single_class), r.metrics.map20,
                      r.metrics.map30, r.metrics.map50, r.metrics.map50_95, r.fps, r.metrics.mean_iou);
        out += line;
    }
    return out;
}

void cmd_synth(const std::string& scene_path, const std::string& output_dir) {
    const auto spec = synth::read_scene_file(scene_path);
    write_scene(output_dir, spec, synth::generate(spec));
}

eval::MetricsReport cmd_eval(const EvalRequest& request) {
    const auto preds = read_detection_file(request.predictions);
    const auto truth = request.vid_annotations ? eval::import_vid_annotations(request.ground_truth)
                                               : read_ground_truth_file(request.ground_truth);
    std::optional<eval::RunSummary> run;
    if (!request.run_log.empty()) run = eval::read_run_log(request.run_log);
    auto report = eval::evaluate(preds, truth, request.options, run);
    if (!request.output.empty()) write_json(request.output, report.to_json());
    return report;
}

json cmd_extract(const ExtractRequest& request) {
    ExtractOptions options;
    options.frames_dir = request.frames_dir;
    const ExtractedVideo video = extract_mvs(request.video_path, options);
    write_mv_dump(request.output, video.frames);
    const std::string name = fs::path(request.video_path).stem().string();
    json input{{"video", name},
               {"mv_dump", request.output},
               {"width", video.size.width},
               {"height", video.size.height},
               {"frames", video.frame_count}};
    if (!request.frames_dir.empty()) input["frames_pattern"] = (fs::path(request.frames_dir) / "%06d.jpg").string();
    write_json(request.output + ".meta.json", input);
    return input;
}

}  // namespace mvp::app
