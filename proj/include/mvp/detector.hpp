#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mvp/geometry.hpp"
#include "mvp/records.hpp"

namespace mvp {

struct DetectionRequest {
    std::int64_t frame = 0;
    std::string image_ref;
    std::vector<std::string> prompts;
};

struct DetectionResponse {
    std::int64_t frame = 0;
    std::vector<Detection> detections;
};

struct DetectorOptions {
    // Detections scoring below this are discarded at the interface so every
    // source is thresholded identically.
    double score_floor = 0.1;
    std::chrono::milliseconds timeout{60'000};
};

class Detector {
public:
    virtual ~Detector() = default;

    /// Returns label-closed detections for one frame (every label is one of
    /// `req.prompts`). Throws DetectorError subclasses on failure.
    virtual DetectionResponse detect(const DetectionRequest& req) = 0;
};

/// Throws ProtocolError when `resp` breaks the response invariants for `req`.
void validate_response(const DetectionRequest& req, const DetectionResponse& resp);

std::string encode_request(const DetectionRequest& req);
std::string encode_response(const DetectionResponse& resp);
DetectionResponse decode_response(const std::string& line);

/// Read-only index over a precomputed detection file, keyed by (video, frame).
class DetectionStore {
public:
    DetectionStore() = default;
    explicit DetectionStore(std::vector<FrameDetections> frames);
    static std::shared_ptr<const DetectionStore> load(const std::string& path);

    const std::vector<Detection>* find(const std::string& video, std::int64_t frame) const;
    std::vector<std::string> videos() const;
    std::vector<std::string> labels(const std::string& video) const;
    // One past the highest frame index stored for `video`.
    std::int64_t frame_span(const std::string& video) const;

private:
    std::map<std::pair<std::string, std::int64_t>, std::vector<Detection>> frames_;
};

class PrecomputedDetector final : public Detector {
public:
    PrecomputedDetector(std::shared_ptr<const DetectionStore> store, std::string video,
                        DetectorOptions options = {});

    DetectionResponse detect(const DetectionRequest& req) override;

private:
    std::shared_ptr<const DetectionStore> store_;
    std::string video_;
    DetectorOptions options_;
};

/// Runs `command` through /bin/sh and speaks the line-delimited JSON protocol
/// over its stdin/stdout. One request in flight at a time.
class BridgeDetector final : public Detector {
public:
    explicit BridgeDetector(const std::string& command, DetectorOptions options = {});
    ~BridgeDetector() override;

    BridgeDetector(const BridgeDetector&) = delete;
    BridgeDetector& operator=(const BridgeDetector&) = delete;

    DetectionResponse detect(const DetectionRequest& req) override;

private:
    std::string read_line();

    DetectorOptions options_;
    int pid_ = -1;
    int fd_ = -1;
    std::string buffer_;
};

}  // namespace mvp
