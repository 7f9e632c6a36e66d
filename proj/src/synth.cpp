#include "mvp/synth.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "mvp/error.hpp"

namespace mvp::synth {
namespace {

using nlohmann::json;

Vec2 velocity(const Motion& motion) {
    if (const auto* t = std::get_if<Translate>(&motion)) return {t->u, t->v};
    if (const auto* p = std::get_if<Parallax>(&motion)) {
        return {0.5 * (p->near.x + p->far.x), 0.5 * (p->near.y + p->far.y)};
    }
    return {};
}

// Displacement of content at `p` between frame t-1 (box `prev`) and t.
Vec2 field(const Motion& motion, const PixelBox& prev, double px, double py) {
    if (const auto* z = std::get_if<Zoom>(&motion)) {
        return {(z->scale - 1.0) * (px - prev.center_x()), (z->scale - 1.0) * (py - prev.center_y())};
    }
    if (const auto* p = std::get_if<Parallax>(&motion)) {
        return px < prev.center_x() ? p->near : p->far;
    }
    return velocity(motion);
}

Vec2 vec_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2) throw SpecError("expected [u, v]");
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

PixelBox object_box_at(const SceneObject& object, std::int64_t t) {
    const PixelBox& b = object.box;
    const double n = static_cast<double>(t);
    if (const auto* z = std::get_if<Zoom>(&object.motion)) {
        const double f = std::pow(z->scale, n);
        const double hw = 0.5 * b.width() * f;
        const double hh = 0.5 * b.height() * f;
        return {b.center_x() - hw, b.center_y() - hh, b.center_x() + hw, b.center_y() + hh};
    }
    const Vec2 v = velocity(object.motion);
    return {b.x_min + n * v.x, b.y_min + n * v.y, b.x_max + n * v.x, b.y_max + n * v.y};
}

void SceneSpec::validate() const {
    if (size.width <= 0 || size.height <= 0) throw SpecError("scene size must be positive");
    if (frames < 1) throw SpecError("scene needs at least one frame");
    if (block <= 0) throw SpecError("block size must be positive");
    for (const auto& obj : objects) {
        if (obj.label.empty()) throw SpecError("object without a label");
        if (!(obj.box.width() > 0) || !(obj.box.height() > 0)) {
            throw SpecError("object '" + obj.label + "' has an empty box");
        }
        if (const auto* z = std::get_if<Zoom>(&obj.motion); z && !(z->scale > 0)) {
            throw SpecError("object '" + obj.label + "': zoom scale must be positive");
        }
        if (!(obj.jitter.magnitude >= 0)) throw SpecError("object '" + obj.label + "': negative jitter");
        for (std::int64_t t = 0; t < frames; ++t) {
            const PixelBox b = object_box_at(obj, t);
            if (b.x_min < 0 || b.y_min < 0 || b.x_max > size.width || b.y_max > size.height) {
                throw SpecError("object '" + obj.label + "' leaves the frame at t=" + std::to_string(t));
            }
        }
    }
}

Scene generate(const SceneSpec& spec) {
    spec.validate();
    Scene scene;
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    auto noise = [&](const Jitter& j) {
        if (j.magnitude == 0.0) return 0.0;
        return j.magnitude * (j.kind == NoiseKind::Gaussian ? gauss(rng) : uniform(rng));
    };

    const int B = spec.block;
    const int cols = (spec.size.width + B - 1) / B;
    const int rows = (spec.size.height + B - 1) / B;

    for (std::int64_t t = 0; t < spec.frames; ++t) {
        GroundTruthFrame truth{spec.video, t, {}};
        FrameDetections dets{spec.video, t, {}};
        for (const auto& obj : spec.objects) {
            const YoloBox box = to_yolo(object_box_at(obj, t), spec.size);
            truth.boxes.push_back({box, obj.label});
            dets.detections.push_back({box, 1.0, obj.label, -1});
        }
        scene.truth.push_back(std::move(truth));
        scene.detections.push_back(std::move(dets));

        if (t == 0) continue;
        MvFrame frame{t, {}};
        for (const auto& obj : spec.objects) {
            const PixelBox prev = object_box_at(obj, t - 1);
            const int c0 = std::max(0, static_cast<int>(std::floor(prev.x_min / B)));
            const int c1 = std::min(cols - 1, static_cast<int>(std::ceil(prev.x_max / B)) - 1);
            const int r0 = std::max(0, static_cast<int>(std::floor(prev.y_min / B)));
            const int r1 = std::min(rows - 1, static_cast<int>(std::ceil(prev.y_max / B)) - 1);
            for (int r = r0; r <= r1; ++r) {
                for (int c = c0; c <= c1; ++c) {
                    const double sx = c * B + 0.5 * B;
                    const double sy = r * B + 0.5 * B;
                    const Vec2 d = field(obj.motion, prev, sx, sy);
                    MotionVector mv;
                    mv.frame = t;
                    mv.direction = MvDirection::Past;
                    mv.block_w = B;
                    mv.block_h = B;
                    mv.src_x = sx;
                    mv.src_y = sy;
                    mv.dst_x = sx + d.x + noise(obj.jitter);
                    mv.dst_y = sy + d.y + noise(obj.jitter);
                    frame.vectors.push_back(mv);
                }
            }
        }
        if (!frame.vectors.empty()) scene.motion.push_back(std::move(frame));
    }
    return scene;
}

SceneSpec scene_from_json(const json& j) {
    try {
        SceneSpec spec;
        spec.video = j.value("video", spec.video);
        spec.size = {j.at("width").get<int>(), j.at("height").get<int>()};
        spec.frames = j.at("frames").get<std::int64_t>();
        spec.block = j.value("block", spec.block);
        spec.seed = j.value("seed", spec.seed);
        for (const auto& o : j.at("objects")) {
            SceneObject obj;
            obj.label = o.at("label").get<std::string>();
            const auto& b = o.at("box");
            if (!b.is_array() || b.size() != 4) throw SpecError("object box must be [x_min, y_min, x_max, y_max]");
            obj.box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
            const json motion = o.value("motion", json{{"type", "static"}});
            const std::string type = motion.at("type").get<std::string>();
            if (type == "translate") {
                obj.motion = Translate{motion.at("u").get<double>(), motion.at("v").get<double>()};
            } else if (type == "static") {
                obj.motion = Translate{};
            } else if (type == "zoom") {
                obj.motion = Zoom{motion.at("scale").get<double>()};
            } else if (type == "parallax") {
                obj.motion = Parallax{vec_from_json(motion.at("near")), vec_from_json(motion.at("far"))};
            } else {
                throw SpecError("unknown motion type '" + type + "'");
            }
            if (o.contains("jitter")) {
                const auto& jit = o["jitter"];
                const std::string dist = jit.value("distribution", "gaussian");
                if (dist == "gaussian") {
                    obj.jitter.kind = NoiseKind::Gaussian;
                } else if (dist == "uniform") {
                    obj.jitter.kind = NoiseKind::Uniform;
                } else {
                    throw SpecError("unknown jitter distribution '" + dist + "'");
                }
                obj.jitter.magnitude = jit.at("magnitude").get<double>();
            }
            spec.objects.push_back(std::move(obj));
        }
        return spec;
    } catch (const json::exception& e) {
        throw SpecError(std::string("malformed scene: ") + e.what());
    }
}

json scene_to_json(const SceneSpec& spec) {
    json objects = json::array();
    for (const auto& obj : spec.objects) {
        json motion;
        if (const auto* t = std::get_if<Translate>(&obj.motion)) {
            motion = {{"type", "translate"}, {"u", t->u}, {"v", t->v}};
        } else if (const auto* z = std::get_if<Zoom>(&obj.motion)) {
            motion = {{"type", "zoom"}, {"scale", z->scale}};
        } else {
            const auto& p = std::get<Parallax>(obj.motion);
            motion = {{"type", "parallax"}, {"near", {p.near.x, p.near.y}}, {"far", {p.far.x, p.far.y}}};
        }
        objects.push_back({{"label", obj.label},
                           {"box", {obj.box.x_min, obj.box.y_min, obj.box.x_max, obj.box.y_max}},
                           {"motion", motion},
                           {"jitter",
                            {{"distribution", obj.jitter.kind == NoiseKind::Gaussian ? "gaussian" : "uniform"},
                             {"magnitude", obj.jitter.magnitude}}}});
    }
    return {{"video", spec.video},   {"width", spec.size.width}, {"height", spec.size.height},
            {"frames", spec.frames}, {"block", spec.block},      {"seed", spec.seed},
            {"objects", objects}};
}

SceneSpec read_scene_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open scene file '" + path + "'");
    try {
        return scene_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw SpecError("scene file '" + path + "': " + e.what());
    }
}

}  // namespace mvp::synth
