#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace mvp {

struct FrameSize {
    int width = 0;
    int height = 0;

    bool operator==(const FrameSize&) const = default;
};

/// Axis-aligned box in (sub-pixel) frame coordinates.
struct PixelBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double center_x() const { return 0.5 * (x_min + x_max); }
    double center_y() const { return 0.5 * (y_min + y_max); }

    bool operator==(const PixelBox&) const = default;
};

/// Normalized (center-x, center-y, width, height) box relative to the frame.
struct YoloBox {
    double xc = 0.0;
    double yc = 0.0;
    double w = 0.0;
    double h = 0.0;

    bool operator==(const YoloBox&) const = default;
};

struct Detection {
    YoloBox box;
    double score = 0.0;
    std::string label;
    std::int64_t id = -1;

    bool operator==(const Detection&) const = default;
};

YoloBox to_yolo(const PixelBox& box, FrameSize frame);
PixelBox to_pixel(const YoloBox& box, FrameSize frame);

// Clips the pixel form of `box` to [0,W]x[0,H] and re-normalizes it. Returns
// nullopt (dropped) for an empty/inverted extent or a clipped area below
// `min_area` square pixels.
std::optional<YoloBox> clip_and_validate(const YoloBox& box, FrameSize frame, double min_area);

double area_px(const YoloBox& box, FrameSize frame);

}  // namespace mvp
