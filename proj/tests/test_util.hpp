#pragma once

#include <algorithm>
#include <array>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "mvp/detector.hpp"
#include "mvp/geometry.hpp"
#include "mvp/evalkit.hpp"
#include "mvp/mvstream.hpp"
#include "mvp/scheduler.hpp"
#include "mvp/synth.hpp"

namespace mvp::testing {

inline MotionVector past_vector(std::int64_t frame, double sx, double sy, double dx, double dy) {
    MotionVector mv;
    mv.frame = frame;
    mv.direction = MvDirection::Past;
    mv.src_x = sx;
    mv.src_y = sy;
    mv.dst_x = sx + dx;
    mv.dst_y = sy + dy;
    return mv;
}

// One vector at the geometric center of every cell of `box`'s 3x3 grid,
// displaced by `field(offset_from_box_center)`. `skip(row, col)` leaves a cell empty.
inline MvFrame cell_center_frame(const PixelBox& box, const std::function<Vec2(Vec2)>& field,
                                 const std::function<bool(int, int)>& skip = {}) {
    MvFrame frame{1, {}};
    const double cw = box.width() / 3.0;
    const double ch = box.height() / 3.0;
    for (int row = 0; row < 3; ++row) {
        for (int col = 0; col < 3; ++col) {
            if (skip && skip(row, col)) continue;
            const Vec2 g{(col - 1) * cw, (row - 1) * ch};
            const Vec2 d = field(g);
            frame.vectors.push_back(past_vector(1, box.center_x() + g.x, box.center_y() + g.y, d.x, d.y));
        }
    }
    return frame;
}

// Detector test double answering from a per-frame script and recording calls.
class ScriptedDetector final : public Detector {
public:
    std::map<std::int64_t, std::vector<Detection>> script;
    std::vector<DetectionRequest> calls;

    DetectionResponse detect(const DetectionRequest& req) override {
        calls.push_back(req);
        DetectionResponse resp{req.frame, {}};
        if (auto it = script.find(req.frame); it != script.end()) {
            for (const auto& d : it->second) {
                for (const auto& p : req.prompts) {
                    if (p == d.label) resp.detections.push_back(d);
                }
            }
        }
        return resp;
    }

    std::vector<std::int64_t> call_frames() const {
        std::vector<std::int64_t> out;
        for (const auto& c : calls) out.push_back(c.frame);
        return out;
    }
};

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("mvp_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

struct SceneRun {
    synth::Scene scene;
    VideoRun run;
    double mean_iou = 0.0;
};

// Generates `spec` and runs it through the scheduler with the scene's exact
// keyframe detections.
inline SceneRun run_scene(const synth::SceneSpec& spec, const MvpConfig& cfg, RunMode mode = RunMode::Mvp) {
    SceneRun out;
    out.scene = synth::generate(spec);
    VideoInput input{spec.video, spec.size, spec.frames, MvStream(out.scene.motion), {}};
    PrecomputedDetector detector(std::make_shared<const DetectionStore>(out.scene.detections), spec.video);
    std::vector<std::string> prompts;
    for (const auto& o : spec.objects) {
        if (std::find(prompts.begin(), prompts.end(), o.label) == prompts.end()) prompts.push_back(o.label);
    }
    out.run = run_video(input, detector, prompts, cfg, mode);
    out.mean_iou = eval::mean_best_iou(out.run.frames, out.scene.truth);
    return out;
}

inline synth::SceneSpec single_object(const FrameSize& size, const PixelBox& box, synth::Motion motion,
                                      std::int64_t frames, synth::Jitter jitter = {}, std::uint64_t seed = 0) {
    synth::SceneSpec spec;
    spec.size = size;
    spec.frames = frames;
    spec.seed = seed;
    spec.objects.push_back({"obj", box, motion, jitter});
    return spec;
}

}  // namespace mvp::testing
