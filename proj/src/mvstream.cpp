#include "mvp/mvstream.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "mvp/error.hpp"

namespace mvp {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view field, const char* name, std::size_t line, int base = 10) {
    field = trim(field);
    T value{};
    std::from_chars_result res{};
    if constexpr (std::is_floating_point_v<T>) {
        res = std::from_chars(field.data(), field.data() + field.size(), value);
    } else {
        res = std::from_chars(field.data(), field.data() + field.size(), value, base);
    }
    if (field.empty() || res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
        throw ParseError(std::string("bad ") + name + " field '" + std::string(field) + "'", line);
    }
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(value)) {
            throw ParseError(std::string("non-finite ") + name, line);
        }
    }
    return value;
}

MotionVector parse_record(std::string_view text, std::size_t line) {
    std::array<std::string_view, 9> fields;
    std::size_t count = 0;
    while (true) {
        const auto comma = text.find(',');
        if (count == fields.size()) {
            throw ParseError("expected 9 fields, found more", line);
        }
        fields[count++] = text.substr(0, comma);
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    if (count != fields.size()) {
        throw ParseError("expected 9 fields, found " + std::to_string(count), line);
    }

    MotionVector mv;
    mv.frame = parse_number<std::int64_t>(fields[0], "framenum", line);
    if (mv.frame < 0) throw ParseError("negative framenum", line);
    const int source = parse_number<int>(fields[1], "source", line);
    if (source == -1) {
        mv.direction = MvDirection::Past;
    } else if (source == 1) {
        mv.direction = MvDirection::Future;
    } else {
        throw ParseError("source must be -1 or 1", line);
    }
    mv.block_w = parse_number<int>(fields[2], "blockw", line);
    mv.block_h = parse_number<int>(fields[3], "blockh", line);
    if (mv.block_w <= 0 || mv.block_h <= 0) throw ParseError("block size must be positive", line);
    mv.src_x = parse_number<double>(fields[4], "srcx", line);
    mv.src_y = parse_number<double>(fields[5], "srcy", line);
    mv.dst_x = parse_number<double>(fields[6], "dstx", line);
    mv.dst_y = parse_number<double>(fields[7], "dsty", line);
    std::string_view flags = trim(fields[8]);
    if (flags.starts_with("0x") || flags.starts_with("0X")) flags.remove_prefix(2);
    mv.flags = parse_number<std::uint64_t>(flags, "flags", line, 16);
    return mv;
}

void append_number(std::string& out, double v) {
    std::array<char, 64> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.append(buf.data(), res.ptr);
}

}  // namespace

std::vector<MvFrame> parse_mv_dump(std::istream& in, FuturePolicy policy) {
    std::vector<MvFrame> frames;
    std::string raw;
    std::size_t line = 0;
    bool seen_header = false;
    std::int64_t last_frame = -1;

    while (std::getline(in, raw)) {
        ++line;
        const std::string_view text = trim(raw);
        if (text.empty()) continue;
        if (!seen_header) {
            if (text != kMvDumpHeader) {
                throw ParseError("missing or malformed header", line);
            }
            seen_header = true;
            continue;
        }
        MotionVector mv = parse_record(text, line);
        if (mv.frame < last_frame) {
            throw FormatError("line " + std::to_string(line) + ": frame " + std::to_string(mv.frame) +
                              " follows frame " + std::to_string(last_frame));
        }
        last_frame = mv.frame;

        if (mv.direction == MvDirection::Future) {
            if (policy == FuturePolicy::Drop) continue;
            if (policy == FuturePolicy::Invert) {
                // Content travels dst -> src going forward, so the equivalent
                // backward step ends at dst and starts one displacement earlier.
                mv.src_x = 2.0 * mv.dst_x - mv.src_x;
                mv.src_y = 2.0 * mv.dst_y - mv.src_y;
                mv.direction = MvDirection::Past;
            }
        }
        if (frames.empty() || frames.back().frame != mv.frame) {
            frames.push_back(MvFrame{mv.frame, {}});
        }
        frames.back().vectors.push_back(mv);
    }
    return frames;
}

std::vector<MvFrame> read_mv_dump(const std::string& path, FuturePolicy policy) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open motion-vector dump '" + path + "'");
    return parse_mv_dump(in, policy);
}

void write_mv_dump(std::ostream& out, std::span<const MvFrame> frames) {
    std::string line;
    out << kMvDumpHeader << '\n';
    for (const auto& f : frames) {
        for (const auto& mv : f.vectors) {
            line.clear();
            line += std::to_string(mv.frame);
            line += mv.direction == MvDirection::Past ? ",-1," : ",1,";
            line += std::to_string(mv.block_w);
            line += ',';
            line += std::to_string(mv.block_h);
            for (double v : {mv.src_x, mv.src_y, mv.dst_x, mv.dst_y}) {
                line += ',';
                append_number(line, v);
            }
            std::array<char, 32> hex;
            const auto res = std::to_chars(hex.data(), hex.data() + hex.size(), mv.flags, 16);
            line += ",0x";
            line.append(hex.data(), res.ptr);
            out << line << '\n';
        }
    }
}

void write_mv_dump(const std::string& path, std::span<const MvFrame> frames) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write motion-vector dump '" + path + "'");
    write_mv_dump(out, frames);
}

std::vector<MotionVector> vectors_in_box(const MvFrame& frame, const PixelBox& region) {
    std::vector<MotionVector> out;
    for (const auto& mv : frame.vectors) {
        if (mv.src_x >= region.x_min && mv.src_x < region.x_max && mv.src_y >= region.y_min &&
            mv.src_y < region.y_max) {
            out.push_back(mv);
        }
    }
    return out;
}

MvStream::MvStream(std::vector<MvFrame> frames) {
    for (auto& f : frames) {
        auto& slot = frames_[f.frame];
        slot.frame = f.frame;
        slot.vectors.insert(slot.vectors.end(), f.vectors.begin(), f.vectors.end());
    }
}

MvFrame MvStream::at(std::int64_t frame) const {
    if (auto it = frames_.find(frame); it != frames_.end()) return it->second;
    return MvFrame{frame, {}};
}

std::int64_t MvStream::frame_span() const {
    return frames_.empty() ? 0 : frames_.rbegin()->first + 1;
}

std::size_t MvStream::vector_count() const {
    std::size_t n = 0;
    for (const auto& [_, f] : frames_) n += f.vectors.size();
    return n;
}

}  // namespace mvp
