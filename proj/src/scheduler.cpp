#include "mvp/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "mvp/error.hpp"

namespace mvp {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

const YoloBox& outcome_box(const PropagationOutcome& outcome) {
    if (const auto* t = std::get_if<Translated>(&outcome)) return t->box;
    return std::get<Scaled>(outcome).box;
}

}  // namespace

const char* run_mode_name(RunMode mode) {
    switch (mode) {
        case RunMode::Mvp: return "mvp";
        case RunMode::Frozen: return "frozen";
        case RunMode::Framewise: return "framewise";
    }
    return "?";
}

RunMode parse_run_mode(const std::string& name) {
    if (name == "mvp") return RunMode::Mvp;
    if (name == "frozen") return RunMode::Frozen;
    if (name == "framewise") return RunMode::Framewise;
    throw InputError("unknown mode '" + name + "' (expected mvp, frozen or framewise)");
}

const char* cause_name(DetectorCause cause) {
    switch (cause) {
        case DetectorCause::None: return "none";
        case DetectorCause::Keyframe: return "keyframe";
        case DetectorCause::PropagationFailure: return "propagation_failure";
        case DetectorCause::AreaGrowth: return "area_growth";
    }
    return "?";
}

nlohmann::json FrameLog::to_json(bool with_timing) const {
    nlohmann::json j{{"video", video},
                     {"frame", frame},
                     {"detector_called", detector_called},
                     {"cause", detector_called ? nlohmann::json(cause_name(cause)) : nlohmann::json(nullptr)},
                     {"per_track_outcomes", per_track_outcomes}};
    if (detector_called) j["prompts"] = prompts;
    if (!mu_r.empty()) j["mu_r"] = mu_r;
    if (with_timing) {
        j["wall_ms"] = wall_ms;
        j["stage_ms"] = {{"detect", detect_ms}, {"propagate", propagate_ms}};
    }
    return j;
}

GrowthCheck check_growth(const TrackState& track, const YoloBox& new_box, std::int64_t t, FrameSize size,
                         const MvpConfig& cfg) {
    if (!cfg.growth_check_enabled) return {false, track};
    const double area = area_px(new_box, size);
    const bool fires = area > cfg.growth_ratio * track.anchor_area && (t - track.anchor_frame) <= cfg.growth_window;
    if (!fires) return {false, track};
    TrackState updated = track;
    updated.anchor_frame = t;
    updated.anchor_area = area;
    return {true, updated};
}

PipelineState update_single_class(PipelineState state, const std::vector<Detection>& detections, bool fallback,
                                  const MvpConfig& cfg) {
    if (!cfg.single_class_enabled) {
        state.single_class = false;
        state.current_class.reset();
        state.miss_count = 0;
        return state;
    }
    const Detection* confident = nullptr;
    int qualifying = 0;
    for (const auto& d : detections) {
        if (d.score >= cfg.tau_cls) {
            ++qualifying;
            confident = &d;
        }
    }
    // A fallback that finds nothing confident while narrowed counts as a miss
    // instead of clearing the switch outright; M consecutive misses clear it.
    if (state.single_class && fallback && qualifying == 0) {
        if (++state.miss_count >= cfg.miss_limit) {
            state.single_class = false;
            state.current_class.reset();
            state.miss_count = 0;
        }
        return state;
    }
    state.miss_count = 0;
    if (qualifying == 1) {
        state.single_class = true;
        state.current_class = confident->label;
    } else {
        state.single_class = false;
        state.current_class.reset();
    }
    return state;
}

Scheduler::Scheduler(std::string video, FrameSize size, std::vector<std::string> prompts, Detector& detector,
                     MvpConfig cfg, RunMode mode)
    : video_(std::move(video)),
      size_(size),
      prompts_(std::move(prompts)),
      detector_(detector),
      cfg_(cfg),
      mode_(mode) {
    cfg_.validate();
    if (prompts_.empty()) throw InputError("video '" + video_ + "': empty prompt list");
    if (size_.width <= 0 || size_.height <= 0) throw InputError("video '" + video_ + "': frame size must be positive");
    if (mode_ == RunMode::Framewise) cfg_.keyframe_interval = 1;
}

std::vector<std::string> Scheduler::active_prompts() const {
    if (state_.single_class && state_.current_class) return {*state_.current_class};
    return prompts_;
}

std::vector<Detection> Scheduler::run_detector(const FrameInput& input, bool fallback, FrameLog& log) {
    const auto start = Clock::now();
    DetectionRequest req{input.frame, input.image_ref, active_prompts()};
    DetectionResponse resp = detector_.detect(req);

    std::vector<Detection> out;
    state_.tracks.clear();
    for (const auto& d : resp.detections) {
        const auto clipped = clip_and_validate(d.box, size_, cfg_.min_area);
        if (!clipped) continue;
        Detection det = d;
        det.box = *clipped;
        det.id = state_.next_id++;
        state_.tracks.push_back({det, input.frame, area_px(det.box, size_)});
        out.push_back(det);
    }
    state_ = update_single_class(std::move(state_), resp.detections, fallback, cfg_);

    log.detector_called = true;
    log.prompts = std::move(req.prompts);
    log.detect_ms += elapsed_ms(start);
    return out;
}

std::vector<Detection> Scheduler::step(const FrameInput& input, FrameLog* log) {
    const auto start = Clock::now();
    FrameLog local;
    FrameLog& lg = log != nullptr ? *log : local;
    lg.video = video_;
    lg.frame = input.frame;
    if (input.frame != state_.t) {
        throw InputError("video '" + video_ + "': expected frame " + std::to_string(state_.t) + ", got " +
                         std::to_string(input.frame));
    }

    std::vector<Detection> result;
    if (state_.t % cfg_.keyframe_interval == 0) {
        result = run_detector(input, false, lg);
        lg.cause = DetectorCause::Keyframe;
    } else if (mode_ == RunMode::Frozen) {
        for (const auto& track : state_.tracks) result.push_back(track.detection);
    } else {
        const auto prop_start = Clock::now();
        std::vector<TrackState> next;
        bool failure = false;
        bool growth = false;
        for (const auto& track : state_.tracks) {
            const PropagationOutcome outcome = propagate_box(track.detection.box, input.motion, size_, cfg_);
            lg.per_track_outcomes.emplace_back(outcome_name(outcome));
            if (std::holds_alternative<Failed>(outcome)) {
                failure = true;
                continue;
            }
            if (const auto* s = std::get_if<Scaled>(&outcome)) lg.mu_r.push_back(s->mu_r);
            const auto clipped = clip_and_validate(outcome_box(outcome), size_, cfg_.min_area);
            if (!clipped) {
                lg.per_track_outcomes.back() += "+dropped";
                continue;
            }
            GrowthCheck check = check_growth(track, *clipped, state_.t, size_, cfg_);
            growth = growth || check.fires;
            check.track.detection.box = *clipped;
            next.push_back(std::move(check.track));
        }
        lg.propagate_ms += elapsed_ms(prop_start);

        if (failure || growth) {
            result = run_detector(input, true, lg);
            lg.cause = failure ? DetectorCause::PropagationFailure : DetectorCause::AreaGrowth;
        } else {
            state_.tracks = std::move(next);
            for (const auto& track : state_.tracks) result.push_back(track.detection);
        }
    }

    ++state_.t;
    lg.wall_ms = elapsed_ms(start);
    return result;
}

std::size_t VideoRun::detector_calls() const {
    return static_cast<std::size_t>(
        std::count_if(log.begin(), log.end(), [](const FrameLog& l) { return l.detector_called; }));
}

std::size_t VideoRun::fallback_calls() const {
    return static_cast<std::size_t>(std::count_if(log.begin(), log.end(), [](const FrameLog& l) {
        return l.detector_called && l.cause != DetectorCause::Keyframe;
    }));
}

double VideoRun::wall_ms() const {
    return std::accumulate(log.begin(), log.end(), 0.0, [](double acc, const FrameLog& l) { return acc + l.wall_ms; });
}

VideoRun run_video(const VideoInput& input, Detector& detector, const std::vector<std::string>& prompts,
                   const MvpConfig& cfg, RunMode mode) {
    if (input.frame_count <= 0) throw InputError("video '" + input.video + "': no frames");
    if (input.motion.frame_span() > input.frame_count) {
        throw InputError("video '" + input.video + "': motion vectors reference frame " +
                         std::to_string(input.motion.frame_span() - 1) + " beyond the last frame " +
                         std::to_string(input.frame_count - 1));
    }
    Scheduler scheduler(input.video, input.size, prompts, detector, cfg, mode);
    VideoRun run;
    run.frames.reserve(static_cast<std::size_t>(input.frame_count));
    run.log.reserve(static_cast<std::size_t>(input.frame_count));
    for (std::int64_t t = 0; t < input.frame_count; ++t) {
        FrameInput frame{t, input.image_ref ? input.image_ref(t) : std::string{}, input.motion.at(t)};
        FrameLog log;
        auto dets = scheduler.step(frame, &log);
        run.frames.push_back({input.video, t, std::move(dets)});
        run.log.push_back(std::move(log));
    }
    return run;
}

}  // namespace mvp
