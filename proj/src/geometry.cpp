#include "mvp/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "mvp/error.hpp"

namespace mvp {
namespace {

void require_frame(FrameSize frame) {
    if (frame.width <= 0 || frame.height <= 0) {
        throw GeometryError("frame size must be positive");
    }
}

bool finite(double a, double b, double c, double d) {
    return std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && std::isfinite(d);
}

}  // namespace

YoloBox to_yolo(const PixelBox& box, FrameSize frame) {
    require_frame(frame);
    if (!finite(box.x_min, box.y_min, box.x_max, box.y_max)) {
        throw GeometryError("non-finite pixel box coordinate");
    }
    const double W = frame.width;
    const double H = frame.height;
    return {(box.x_min + box.x_max) / (2.0 * W), (box.y_min + box.y_max) / (2.0 * H),
            (box.x_max - box.x_min) / W, (box.y_max - box.y_min) / H};
}

PixelBox to_pixel(const YoloBox& box, FrameSize frame) {
    require_frame(frame);
    if (!finite(box.xc, box.yc, box.w, box.h)) {
        throw GeometryError("non-finite normalized box coordinate");
    }
    const double W = frame.width;
    const double H = frame.height;
    return {W * (box.xc - box.w / 2.0), H * (box.yc - box.h / 2.0), W * (box.xc + box.w / 2.0),
            H * (box.yc + box.h / 2.0)};
}

std::optional<YoloBox> clip_and_validate(const YoloBox& box, FrameSize frame, double min_area) {
    if (!(min_area > 0.0)) {
        throw GeometryError("min_area must be positive");
    }
    PixelBox px = to_pixel(box, frame);
    // Corners clamp independently; an inverted box stays inverted and is dropped.
    px.x_min = std::clamp(px.x_min, 0.0, static_cast<double>(frame.width));
    px.x_max = std::clamp(px.x_max, 0.0, static_cast<double>(frame.width));
    px.y_min = std::clamp(px.y_min, 0.0, static_cast<double>(frame.height));
    px.y_max = std::clamp(px.y_max, 0.0, static_cast<double>(frame.height));
    if (!(px.x_max > px.x_min) || !(px.y_max > px.y_min)) {
        return std::nullopt;
    }
    if (px.width() * px.height() < min_area) {
        return std::nullopt;
    }
    return to_yolo(px, frame);
}

double area_px(const YoloBox& box, FrameSize frame) {
    return static_cast<double>(frame.width) * static_cast<double>(frame.height) * box.w * box.h;
}

}  // namespace mvp
