#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvp/geometry.hpp"
#include "mvp/mvstream.hpp"

namespace mvp {

struct ExtractOptions {
    // When non-empty, every decoded frame is also written there as
    // `%06d.jpg` so a live detector bridge can be pointed at the images.
    std::string frames_dir;
};

struct ExtractedVideo {
    FrameSize size;
    std::int64_t frame_count = 0;
    std::vector<MvFrame> frames;  // both directions, verbatim; frames without side data omitted
};

/// Decodes `video_path` with motion-vector export enabled and collects the
/// per-frame block vectors in presentation order (frame 0 is the first decoded
/// picture). Sub-pel source positions are kept as fractional pixels.
ExtractedVideo extract_mvs(const std::string& video_path, const ExtractOptions& options = {});

bool extraction_available();

}  // namespace mvp
