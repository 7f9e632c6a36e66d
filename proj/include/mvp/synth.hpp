#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mvp/geometry.hpp"
#include "mvp/mvstream.hpp"
#include "mvp/records.hpp"

namespace mvp::synth {

struct Translate {
    double u = 0.0;  // px/frame
    double v = 0.0;
};

// Per-frame similarity about the object's (fixed) center.
struct Zoom {
    double scale = 1.0;
};

// Left half of the object moves with `near`, right half with `far`; the
// reference box follows the mean of the two.
struct Parallax {
    Vec2 near;
    Vec2 far;
};

using Motion = std::variant<Translate, Zoom, Parallax>;

enum class NoiseKind { Gaussian, Uniform };

// Independent per-component noise on every emitted vector. `magnitude` is the
// standard deviation (Gaussian) or the half-width (Uniform), in px.
struct Jitter {
    NoiseKind kind = NoiseKind::Gaussian;
    double magnitude = 0.0;
};

struct SceneObject {
    std::string label;
    PixelBox box;  // at frame 0
    Motion motion;
    Jitter jitter;
};

struct SceneSpec {
    std::string video = "synth";
    FrameSize size{1280, 720};
    std::int64_t frames = 1;
    int block = 16;
    std::uint64_t seed = 0;
    std::vector<SceneObject> objects;

    // Throws SpecError, including when an object leaves the frame.
    void validate() const;
};

struct Scene {
    std::vector<MvFrame> motion;
    std::vector<GroundTruthFrame> truth;
    std::vector<FrameDetections> detections;  // exact truth at score 1.0, every frame
};

PixelBox object_box_at(const SceneObject& object, std::int64_t t);

Scene generate(const SceneSpec& spec);

SceneSpec scene_from_json(const nlohmann::json& j);
nlohmann::json scene_to_json(const SceneSpec& spec);
SceneSpec read_scene_file(const std::string& path);

}  // namespace mvp::synth
