#include "mvp/records.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "mvp/error.hpp"

namespace mvp {
namespace {

using nlohmann::json;

template <typename Fn>
auto parse_lines(std::istream& in, Fn&& parse_one) {
    std::vector<decltype(parse_one(json{}))> out;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(parse_one(json::parse(raw)));
        } catch (const json::exception& e) {
            throw ParseError(e.what(), line);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line);
        }
    }
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    return out;
}

}  // namespace

json box_to_json(const YoloBox& box) { return json::array({box.xc, box.yc, box.w, box.h}); }

YoloBox box_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) throw ParseError("box must be an array of 4 numbers");
    YoloBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    if (!std::isfinite(b.xc) || !std::isfinite(b.yc) || !std::isfinite(b.w) || !std::isfinite(b.h)) {
        throw ParseError("non-finite box coordinate");
    }
    return b;
}

json detection_to_json(const Detection& d) {
    json j{{"box", box_to_json(d.box)}, {"score", d.score}, {"label", d.label}};
    if (d.id >= 0) j["id"] = d.id;
    return j;
}

Detection detection_from_json(const json& j) {
    Detection d;
    d.box = box_from_json(j.at("box"));
    d.score = j.at("score").get<double>();
    d.label = j.at("label").get<std::string>();
    if (j.contains("id")) d.id = j["id"].get<std::int64_t>();
    return d;
}

std::vector<FrameDetections> parse_detection_lines(std::istream& in) {
    return parse_lines(in, [](const json& j) {
        FrameDetections f;
        f.video = j.at("video").get<std::string>();
        f.frame = j.at("frame").get<std::int64_t>();
        for (const auto& d : j.at("detections")) f.detections.push_back(detection_from_json(d));
        return f;
    });
}

std::vector<FrameDetections> read_detection_file(const std::string& path) {
    auto in = open_in(path);
    return parse_detection_lines(in);
}

void write_detection_lines(std::ostream& out, std::span<const FrameDetections> frames) {
    for (const auto& f : frames) {
        json dets = json::array();
        for (const auto& d : f.detections) dets.push_back(detection_to_json(d));
        out << json{{"video", f.video}, {"frame", f.frame}, {"detections", std::move(dets)}}.dump() << '\n';
    }
}

void write_detection_file(const std::string& path, std::span<const FrameDetections> frames) {
    auto out = open_out(path);
    write_detection_lines(out, frames);
}

std::vector<GroundTruthFrame> parse_ground_truth_lines(std::istream& in) {
    return parse_lines(in, [](const json& j) {
        GroundTruthFrame f;
        f.video = j.at("video").get<std::string>();
        f.frame = j.at("frame").get<std::int64_t>();
        for (const auto& b : j.at("boxes")) {
            f.boxes.push_back({box_from_json(b.at("box")), b.at("label").get<std::string>()});
        }
        return f;
    });
}

std::vector<GroundTruthFrame> read_ground_truth_file(const std::string& path) {
    auto in = open_in(path);
    return parse_ground_truth_lines(in);
}

void write_ground_truth_lines(std::ostream& out, std::span<const GroundTruthFrame> frames) {
    for (const auto& f : frames) {
        json boxes = json::array();
        for (const auto& b : f.boxes) boxes.push_back({{"box", box_to_json(b.box)}, {"label", b.label}});
        out << json{{"video", f.video}, {"frame", f.frame}, {"boxes", std::move(boxes)}}.dump() << '\n';
    }
}

void write_ground_truth_file(const std::string& path, std::span<const GroundTruthFrame> frames) {
    auto out = open_out(path);
    write_ground_truth_lines(out, frames);
}

}  // namespace mvp
