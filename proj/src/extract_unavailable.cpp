#include "mvp/error.hpp"
#include "mvp/extract.hpp"

namespace mvp {

bool extraction_available() { return false; }

ExtractedVideo extract_mvs(const std::string& video_path, const ExtractOptions&) {
    throw ExtractError("cannot extract '" + video_path + "': built without FFmpeg support");
}

}  // namespace mvp
