#include "mvp/detector.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <thread>

#include "mvp/error.hpp"

namespace mvp {

using nlohmann::json;

void validate_response(const DetectionRequest& req, const DetectionResponse& resp) {
    if (resp.frame != req.frame) {
        throw ProtocolError("response for frame " + std::to_string(resp.frame) + " answers request for frame " +
                            std::to_string(req.frame));
    }
    const std::set<std::string> prompts(req.prompts.begin(), req.prompts.end());
    for (const auto& d : resp.detections) {
        if (!(d.score >= 0.0 && d.score <= 1.0)) {
            throw ProtocolError("score " + std::to_string(d.score) + " outside [0,1]");
        }
        if (d.label.empty() || !prompts.contains(d.label)) {
            throw ProtocolError("label '" + d.label + "' not among the requested prompts");
        }
    }
}

std::string encode_request(const DetectionRequest& req) {
    return json{{"frame", req.frame}, {"image_path", req.image_ref}, {"prompts", req.prompts}}.dump();
}

std::string encode_response(const DetectionResponse& resp) {
    json dets = json::array();
    for (const auto& d : resp.detections) dets.push_back(detection_to_json(d));
    return json{{"frame", resp.frame}, {"detections", std::move(dets)}}.dump();
}

DetectionResponse decode_response(const std::string& line) {
    if (line.starts_with("{\"error\":")) {
        std::string message = line;
        try {
            message = json::parse(line).at("error").dump();
        } catch (const json::exception&) {
        }
        throw DetectorError("bridge reported error: " + message);
    }
    try {
        const json j = json::parse(line);
        DetectionResponse resp;
        resp.frame = j.at("frame").get<std::int64_t>();
        for (const auto& d : j.at("detections")) resp.detections.push_back(detection_from_json(d));
        return resp;
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed response: ") + e.what());
    } catch (const ParseError& e) {
        throw ProtocolError(std::string("malformed response: ") + e.what());
    }
}

namespace {

std::vector<Detection> apply_floor(std::vector<Detection> dets, double floor) {
    std::erase_if(dets, [floor](const Detection& d) { return d.score < floor; });
    return dets;
}

}  // namespace

DetectionStore::DetectionStore(std::vector<FrameDetections> frames) {
    for (auto& f : frames) {
        auto& slot = frames_[{f.video, f.frame}];
        slot.insert(slot.end(), f.detections.begin(), f.detections.end());
    }
}

std::shared_ptr<const DetectionStore> DetectionStore::load(const std::string& path) {
    return std::make_shared<const DetectionStore>(read_detection_file(path));
}

const std::vector<Detection>* DetectionStore::find(const std::string& video, std::int64_t frame) const {
    auto it = frames_.find({video, frame});
    return it == frames_.end() ? nullptr : &it->second;
}

std::vector<std::string> DetectionStore::videos() const {
    std::set<std::string> names;
    for (const auto& [key, _] : frames_) names.insert(key.first);
    return {names.begin(), names.end()};
}

std::vector<std::string> DetectionStore::labels(const std::string& video) const {
    std::set<std::string> names;
    for (const auto& [key, dets] : frames_) {
        if (key.first != video) continue;
        for (const auto& d : dets) names.insert(d.label);
    }
    return {names.begin(), names.end()};
}

std::int64_t DetectionStore::frame_span(const std::string& video) const {
    std::int64_t span = 0;
    for (const auto& [key, _] : frames_) {
        if (key.first == video) span = std::max(span, key.second + 1);
    }
    return span;
}

PrecomputedDetector::PrecomputedDetector(std::shared_ptr<const DetectionStore> store, std::string video,
                                         DetectorOptions options)
    : store_(std::move(store)), video_(std::move(video)), options_(options) {}

DetectionResponse PrecomputedDetector::detect(const DetectionRequest& req) {
    const auto* stored = store_->find(video_, req.frame);
    if (stored == nullptr) {
        throw MissingFrameError("no precomputed detections for video '" + video_ + "' frame " +
                                std::to_string(req.frame));
    }
    const std::set<std::string> prompts(req.prompts.begin(), req.prompts.end());
    DetectionResponse resp{req.frame, {}};
    for (const auto& d : *stored) {
        if (prompts.contains(d.label)) resp.detections.push_back(d);
    }
    validate_response(req, resp);
    resp.detections = apply_floor(std::move(resp.detections), options_.score_floor);
    return resp;
}

BridgeDetector::BridgeDetector(const std::string& command, DetectorOptions options) : options_(options) {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
        throw DetectorError(std::string("socketpair: ") + std::strerror(errno));
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(fds[0]);
        ::close(fds[1]);
        throw DetectorError(std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(fds[1], STDIN_FILENO);
        ::dup2(fds[1], STDOUT_FILENO);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(fds[1]);
    pid_ = pid;
    fd_ = fds[0];
}

BridgeDetector::~BridgeDetector() {
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_WR);
        ::close(fd_);
    }
    if (pid_ > 0) {
        for (int i = 0; i < 200; ++i) {
            if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        ::kill(-pid_, SIGKILL);
        ::waitpid(pid_, nullptr, 0);
    }
}

std::string BridgeDetector::read_line() {
    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + options_.timeout;
    while (true) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }
        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
        if (remaining.count() <= 0) throw BridgeTimeoutError("bridge did not answer within the timeout");
        pollfd p{fd_, POLLIN, 0};
        const int ready = ::poll(&p, 1, static_cast<int>(remaining.count()));
        if (ready < 0) {
            if (errno == EINTR) continue;
            throw DetectorError(std::string("poll: ") + std::strerror(errno));
        }
        if (ready == 0) throw BridgeTimeoutError("bridge did not answer within the timeout");
        char chunk[4096];
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw DetectorError(std::string("recv: ") + std::strerror(errno));
        }
        if (n == 0) throw BridgeExitedError("bridge process closed its output");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

DetectionResponse BridgeDetector::detect(const DetectionRequest& req) {
    if (req.prompts.empty()) throw DetectorError("detection request without prompts");
    const std::string line = encode_request(req) + "\n";
    std::size_t sent = 0;
    while (sent < line.size()) {
        const ssize_t n = ::send(fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw BridgeExitedError(std::string("bridge not accepting requests: ") + std::strerror(errno));
        }
        sent += static_cast<std::size_t>(n);
    }
    DetectionResponse resp = decode_response(read_line());
    validate_response(req, resp);
    resp.detections = apply_floor(std::move(resp.detections), options_.score_floor);
    return resp;
}

}  // namespace mvp
