#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

extern "C" {
#include <libavcodec/avcodec.h>
#include <libavformat/avformat.h>
#include <libavutil/imgutils.h>
#include <libavutil/motion_vector.h>
#include <libswscale/swscale.h>
}

#include "mvp/error.hpp"
#include "mvp/extract.hpp"

namespace mvp {
namespace {

std::string av_error(int code) {
    char buf[AV_ERROR_MAX_STRING_SIZE] = {};
    av_strerror(code, buf, sizeof buf);
    return buf;
}

struct FormatCloser {
    void operator()(AVFormatContext* ctx) const { avformat_close_input(&ctx); }
};
struct CodecCloser {
    void operator()(AVCodecContext* ctx) const { avcodec_free_context(&ctx); }
};
struct FrameCloser {
    void operator()(AVFrame* f) const { av_frame_free(&f); }
};
struct PacketCloser {
    void operator()(AVPacket* p) const { av_packet_free(&p); }
};
struct SwsCloser {
    void operator()(SwsContext* s) const { sws_freeContext(s); }
};

using FormatPtr = std::unique_ptr<AVFormatContext, FormatCloser>;
using CodecPtr = std::unique_ptr<AVCodecContext, CodecCloser>;
using FramePtr = std::unique_ptr<AVFrame, FrameCloser>;
using PacketPtr = std::unique_ptr<AVPacket, PacketCloser>;
using SwsPtr = std::unique_ptr<SwsContext, SwsCloser>;

// Writes decoded pictures as baseline JPEG through the mjpeg encoder.
class JpegWriter {
public:
    JpegWriter(std::string dir, int width, int height) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
        const AVCodec* codec = avcodec_find_encoder(AV_CODEC_ID_MJPEG);
        if (codec == nullptr) throw ExtractError("no JPEG encoder available");
        ctx_.reset(avcodec_alloc_context3(codec));
        ctx_->width = width;
        ctx_->height = height;
        ctx_->pix_fmt = AV_PIX_FMT_YUVJ420P;
        ctx_->time_base = {1, 25};
        ctx_->flags |= AV_CODEC_FLAG_QSCALE;
        ctx_->global_quality = FF_QP2LAMBDA * 3;
        if (int rc = avcodec_open2(ctx_.get(), codec, nullptr); rc < 0) {
            throw ExtractError("cannot open JPEG encoder: " + av_error(rc));
        }
        scaled_.reset(av_frame_alloc());
        scaled_->format = AV_PIX_FMT_YUVJ420P;
        scaled_->width = width;
        scaled_->height = height;
        if (av_frame_get_buffer(scaled_.get(), 0) < 0) throw ExtractError("cannot allocate JPEG frame");
        packet_.reset(av_packet_alloc());
    }

    void write(const AVFrame* frame, std::int64_t index) {
        sws_.reset(sws_getCachedContext(sws_.release(), frame->width, frame->height,
                                        static_cast<AVPixelFormat>(frame->format), ctx_->width, ctx_->height,
                                        AV_PIX_FMT_YUVJ420P, SWS_BILINEAR, nullptr, nullptr, nullptr));
        if (!sws_) throw ExtractError("cannot convert decoded frame for JPEG output");
        av_frame_make_writable(scaled_.get());
        sws_scale(sws_.get(), frame->data, frame->linesize, 0, frame->height, scaled_->data, scaled_->linesize);
        scaled_->pts = index;
        if (int rc = avcodec_send_frame(ctx_.get(), scaled_.get()); rc < 0) {
            throw ExtractError("JPEG encode failed: " + av_error(rc));
        }
        char name[32];
        std::snprintf(name, sizeof name, "%06lld.jpg", static_cast<long long>(index));
        std::ofstream out(std::filesystem::path(dir_) / name, std::ios::binary);
        while (avcodec_receive_packet(ctx_.get(), packet_.get()) == 0) {
            out.write(reinterpret_cast<const char*>(packet_->data), packet_->size);
            av_packet_unref(packet_.get());
        }
        if (!out) throw ExtractError("cannot write frame image " + std::string(name));
    }

private:
    std::string dir_;
    CodecPtr ctx_;
    FramePtr scaled_;
    PacketPtr packet_;
    SwsPtr sws_;
};

MvFrame collect(const AVFrame* frame, std::int64_t index) {
    MvFrame out{index, {}};
    const AVFrameSideData* sd = av_frame_get_side_data(frame, AV_FRAME_DATA_MOTION_VECTORS);
    if (sd == nullptr) return out;
    const auto* mvs = reinterpret_cast<const AVMotionVector*>(sd->data);
    const std::size_t count = sd->size / sizeof(AVMotionVector);
    out.vectors.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const AVMotionVector& m = mvs[i];
        MotionVector mv;
        mv.frame = index;
        mv.direction = m.source > 0 ? MvDirection::Future : MvDirection::Past;
        mv.block_w = m.w;
        mv.block_h = m.h;
        mv.dst_x = m.dst_x;
        mv.dst_y = m.dst_y;
        if (m.motion_scale != 0) {
            mv.src_x = m.dst_x + static_cast<double>(m.motion_x) / m.motion_scale;
            mv.src_y = m.dst_y + static_cast<double>(m.motion_y) / m.motion_scale;
        } else {
            mv.src_x = m.src_x;
            mv.src_y = m.src_y;
        }
        mv.flags = m.flags;
        out.vectors.push_back(mv);
    }
    return out;
}

}  // namespace

bool extraction_available() { return true; }

ExtractedVideo extract_mvs(const std::string& video_path, const ExtractOptions& options) {
    AVFormatContext* raw_fmt = nullptr;
    if (int rc = avformat_open_input(&raw_fmt, video_path.c_str(), nullptr, nullptr); rc < 0) {
        throw ExtractError("cannot open '" + video_path + "': " + av_error(rc));
    }
    FormatPtr fmt(raw_fmt);
    if (int rc = avformat_find_stream_info(fmt.get(), nullptr); rc < 0) {
        throw ExtractError("cannot read stream info of '" + video_path + "': " + av_error(rc));
    }
    AVCodec* codec = nullptr;  // non-const in the FFmpeg 4.x signature
    const int stream_index = av_find_best_stream(fmt.get(), AVMEDIA_TYPE_VIDEO, -1, -1, &codec, 0);
    if (stream_index < 0 || codec == nullptr) {
        throw ExtractError("'" + video_path + "' has no decodable video stream");
    }
    CodecPtr dec(avcodec_alloc_context3(codec));
    avcodec_parameters_to_context(dec.get(), fmt->streams[stream_index]->codecpar);
    AVDictionary* opts = nullptr;
    av_dict_set(&opts, "flags2", "+export_mvs", 0);
    const int open_rc = avcodec_open2(dec.get(), codec, &opts);
    av_dict_free(&opts);
    if (open_rc < 0) throw ExtractError("cannot open decoder: " + av_error(open_rc));

    ExtractedVideo video;
    video.size = {dec->width, dec->height};
    std::unique_ptr<JpegWriter> jpeg;
    if (!options.frames_dir.empty()) jpeg = std::make_unique<JpegWriter>(options.frames_dir, dec->width, dec->height);

    FramePtr frame(av_frame_alloc());
    PacketPtr packet(av_packet_alloc());
    auto drain = [&] {
        while (true) {
            const int rc = avcodec_receive_frame(dec.get(), frame.get());
            if (rc == AVERROR(EAGAIN) || rc == AVERROR_EOF) return;
            if (rc < 0) throw ExtractError("decode failed: " + av_error(rc));
            MvFrame mvs = collect(frame.get(), video.frame_count);
            if (!mvs.vectors.empty()) video.frames.push_back(std::move(mvs));
            if (jpeg) jpeg->write(frame.get(), video.frame_count);
            ++video.frame_count;
            av_frame_unref(frame.get());
        }
    };
    while (av_read_frame(fmt.get(), packet.get()) >= 0) {
        if (packet->stream_index == stream_index) {
            const int rc = avcodec_send_packet(dec.get(), packet.get());
            av_packet_unref(packet.get());
            if (rc < 0 && rc != AVERROR(EAGAIN)) throw ExtractError("decode failed: " + av_error(rc));
            drain();
        } else {
            av_packet_unref(packet.get());
        }
    }
    avcodec_send_packet(dec.get(), nullptr);
    drain();
    return video;
}

}  // namespace mvp
