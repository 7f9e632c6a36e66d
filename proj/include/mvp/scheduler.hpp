#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvp/detector.hpp"
#include "mvp/geometry.hpp"
#include "mvp/mvstream.hpp"
#include "mvp/propagate.hpp"
#include "mvp/records.hpp"

namespace mvp {

enum class RunMode {
    Mvp,        // keyframes + motion-vector propagation
    Frozen,     // keyframes, boxes held fixed in between
    Framewise,  // detector on every frame
};

const char* run_mode_name(RunMode mode);
RunMode parse_run_mode(const std::string& name);

struct TrackState {
    Detection detection;
    std::int64_t anchor_frame = 0;  // t*
    double anchor_area = 0.0;       // A*, px^2
};

struct PipelineState {
    std::int64_t t = 0;
    std::vector<TrackState> tracks;
    bool single_class = false;
    std::optional<std::string> current_class;
    int miss_count = 0;
    std::int64_t next_id = 0;
};

enum class DetectorCause { None, Keyframe, PropagationFailure, AreaGrowth };
const char* cause_name(DetectorCause cause);

struct FrameLog {
    std::string video;
    std::int64_t frame = 0;
    bool detector_called = false;
    DetectorCause cause = DetectorCause::None;
    std::vector<std::string> prompts;              // prompts sent, when the detector ran
    std::vector<std::string> per_track_outcomes;   // translated|scaled|failed, plus dropped
    std::vector<double> mu_r;                      // scale factors of Scaled tracks
    double wall_ms = 0.0;
    double detect_ms = 0.0;
    double propagate_ms = 0.0;

    nlohmann::json to_json(bool with_timing = true) const;
};

struct FrameInput {
    std::int64_t frame = 0;
    std::string image_ref;
    MvFrame motion;
};

/// Outcome of the area-growth test for one track.
struct GrowthCheck {
    bool fires = false;
    TrackState track;
};

GrowthCheck check_growth(const TrackState& track, const YoloBox& new_box, std::int64_t t, FrameSize size,
                         const MvpConfig& cfg);

// Re-evaluates the single-class switch after a detector call. `fallback` marks
// calls made outside the keyframe schedule; only those count toward misses.
PipelineState update_single_class(PipelineState state, const std::vector<Detection>& detections,
                                  bool fallback, const MvpConfig& cfg);

/// Sequential per-video state machine producing one detection set per frame.
class Scheduler {
public:
    Scheduler(std::string video, FrameSize size, std::vector<std::string> prompts, Detector& detector,
              MvpConfig cfg, RunMode mode = RunMode::Mvp);

    // Frames must arrive in order starting at 0.
    std::vector<Detection> step(const FrameInput& input, FrameLog* log = nullptr);

    const PipelineState& state() const { return state_; }
    const MvpConfig& config() const { return cfg_; }
    std::vector<std::string> active_prompts() const;

private:
    std::vector<Detection> run_detector(const FrameInput& input, bool fallback, FrameLog& log);

    std::string video_;
    FrameSize size_;
    std::vector<std::string> prompts_;
    Detector& detector_;
    MvpConfig cfg_;
    RunMode mode_;
    PipelineState state_;
};

struct VideoInput {
    std::string video;
    FrameSize size;
    std::int64_t frame_count = 0;
    MvStream motion;
    // Maps a frame index to the image reference handed to the detector.
    std::function<std::string(std::int64_t)> image_ref;
};

struct VideoRun {
    std::vector<FrameDetections> frames;
    std::vector<FrameLog> log;

    std::size_t detector_calls() const;
    std::size_t fallback_calls() const;
    double wall_ms() const;
};

VideoRun run_video(const VideoInput& input, Detector& detector, const std::vector<std::string>& prompts,
                   const MvpConfig& cfg, RunMode mode = RunMode::Mvp);

}  // namespace mvp
