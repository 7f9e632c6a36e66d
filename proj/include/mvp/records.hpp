#pragma once

// Line-delimited JSON files shared by the detector, scheduler, synth and
// evaluation modules:
//   detections:   {"video", "frame", "detections": [{"box": [xc,yc,w,h], "score", "label"}]}
//   ground truth: {"video", "frame", "boxes": [{"box": [xc,yc,w,h], "label"}]}

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvp/geometry.hpp"

namespace mvp {

struct FrameDetections {
    std::string video;
    std::int64_t frame = 0;
    std::vector<Detection> detections;

    bool operator==(const FrameDetections&) const = default;
};

struct LabeledBox {
    YoloBox box;
    std::string label;

    bool operator==(const LabeledBox&) const = default;
};

struct GroundTruthFrame {
    std::string video;
    std::int64_t frame = 0;
    std::vector<LabeledBox> boxes;

    bool operator==(const GroundTruthFrame&) const = default;
};

nlohmann::json box_to_json(const YoloBox& box);
YoloBox box_from_json(const nlohmann::json& j);

nlohmann::json detection_to_json(const Detection& d);
Detection detection_from_json(const nlohmann::json& j);

std::vector<FrameDetections> parse_detection_lines(std::istream& in);
std::vector<FrameDetections> read_detection_file(const std::string& path);
void write_detection_lines(std::ostream& out, std::span<const FrameDetections> frames);
void write_detection_file(const std::string& path, std::span<const FrameDetections> frames);

std::vector<GroundTruthFrame> parse_ground_truth_lines(std::istream& in);
std::vector<GroundTruthFrame> read_ground_truth_file(const std::string& path);
void write_ground_truth_lines(std::ostream& out, std::span<const GroundTruthFrame> frames);
void write_ground_truth_file(const std::string& path, std::span<const GroundTruthFrame> frames);

}  // namespace mvp
