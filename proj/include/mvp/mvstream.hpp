#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "mvp/geometry.hpp"

namespace mvp {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Vec2&) const = default;
};

// Which reference frame a block was predicted from, as recorded in the dump's
// `source` column.
enum class MvDirection : int { Past = -1, Future = 1 };

struct MotionVector {
    std::int64_t frame = 0;
    MvDirection direction = MvDirection::Past;
    int block_w = 16;
    int block_h = 16;
    double src_x = 0.0;  // reference-block center
    double src_y = 0.0;
    double dst_x = 0.0;  // current-block center
    double dst_y = 0.0;
    std::uint64_t flags = 0;

    Vec2 displacement() const { return {dst_x - src_x, dst_y - src_y}; }

    bool operator==(const MotionVector&) const = default;
};

struct MvFrame {
    std::int64_t frame = 0;
    std::vector<MotionVector> vectors;

    bool operator==(const MvFrame&) const = default;
};

// What to do with future-reference (B-frame backward) vectors on ingestion.
enum class FuturePolicy {
    Drop,    // default: only past-reference vectors drive propagation
    Invert,  // rewrite as an equivalent past-reference record (src' = 2*dst - src)
    Keep,    // keep verbatim; aggregation still ignores them
};

inline constexpr std::string_view kMvDumpHeader = "framenum,source,blockw,blockh,srcx,srcy,dstx,dsty,flags";

std::vector<MvFrame> parse_mv_dump(std::istream& in, FuturePolicy policy = FuturePolicy::Drop);
std::vector<MvFrame> read_mv_dump(const std::string& path, FuturePolicy policy = FuturePolicy::Drop);

void write_mv_dump(std::ostream& out, std::span<const MvFrame> frames);
void write_mv_dump(const std::string& path, std::span<const MvFrame> frames);

/// Vectors whose source (reference-block) center lies in the half-open region
/// [x_min, x_max) x [y_min, y_max).
std::vector<MotionVector> vectors_in_box(const MvFrame& frame, const PixelBox& region);

/// Frame-indexed view over a parsed dump. Frames missing from the dump read as
/// empty (intra frames legitimately carry no vectors).
class MvStream {
public:
    MvStream() = default;
    explicit MvStream(std::vector<MvFrame> frames);

    MvFrame at(std::int64_t frame) const;

    // One past the highest frame index carrying a record; 0 when empty.
    std::int64_t frame_span() const;
    std::size_t vector_count() const;

private:
    std::map<std::int64_t, MvFrame> frames_;
};

}  // namespace mvp
