#include <algorithm>
#include <filesystem>
#include <map>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "mvp/error.hpp"
#include "mvp/evalkit.hpp"

namespace mvp::eval {
namespace {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

// ILSVRC2015-VID synset ids for its 30 categories.
const std::map<std::string, std::string>& vid_classes() {
    static const std::map<std::string, std::string> names{
        {"n02691156", "airplane"},  {"n02419796", "antelope"},     {"n02131653", "bear"},
        {"n02834778", "bicycle"},   {"n01503061", "bird"},         {"n02924116", "bus"},
        {"n02958343", "car"},       {"n02402425", "cattle"},       {"n02084071", "dog"},
        {"n02121808", "domestic_cat"}, {"n02503517", "elephant"},  {"n02118333", "fox"},
        {"n02510455", "giant_panda"}, {"n02342885", "hamster"},    {"n02374451", "horse"},
        {"n02129165", "lion"},      {"n01674464", "lizard"},       {"n02484322", "monkey"},
        {"n03790512", "motorcycle"}, {"n02324045", "rabbit"},      {"n02509815", "red_panda"},
        {"n02411705", "sheep"},     {"n01726692", "snake"},        {"n02355227", "squirrel"},
        {"n02129604", "tiger"},     {"n04468005", "train"},        {"n01662784", "turtle"},
        {"n04530566", "watercraft"}, {"n02062744", "whale"},       {"n02391049", "zebra"},
    };
    return names;
}

std::vector<fs::path> xml_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".xml") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

GroundTruthFrame parse_frame(const fs::path& file, const std::string& video) {
    pt::ptree tree;
    try {
        pt::read_xml(file.string(), tree);
    } catch (const pt::xml_parser_error& e) {
        throw ParseError(file.string() + ": " + e.what());
    }
    GroundTruthFrame frame;
    frame.video = video;
    try {
        frame.frame = std::stoll(file.stem().string());
    } catch (const std::exception&) {
        throw ParseError(file.string() + ": frame file name is not a number");
    }
    try {
        const auto& ann = tree.get_child("annotation");
        const FrameSize size{ann.get<int>("size.width"), ann.get<int>("size.height")};
        for (const auto& [key, node] : ann) {
            if (key != "object") continue;
            const std::string synset = node.get<std::string>("name");
            const auto it = vid_classes().find(synset);
            const PixelBox px{node.get<double>("bndbox.xmin"), node.get<double>("bndbox.ymin"),
                              node.get<double>("bndbox.xmax"), node.get<double>("bndbox.ymax")};
            frame.boxes.push_back({to_yolo(px, size), it == vid_classes().end() ? synset : it->second});
        }
    } catch (const pt::ptree_error& e) {
        throw ParseError(file.string() + ": " + e.what());
    }
    return frame;
}

}  // namespace

std::vector<GroundTruthFrame> import_vid_annotations(const std::string& root) {
    fs::path base = fs::path(root).lexically_normal();
    if (base.filename().empty()) base = base.parent_path();
    if (!fs::is_directory(base)) throw InputError("annotation root '" + root + "' is not a directory");

    std::vector<GroundTruthFrame> out;
    auto import_video = [&](const fs::path& dir) {
        for (const auto& file : xml_files(dir)) out.push_back(parse_frame(file, dir.filename().string()));
    };
    if (!xml_files(base).empty()) {
        import_video(base);
        return out;
    }
    std::vector<fs::path> videos;
    for (const auto& entry : fs::directory_iterator(base)) {
        if (entry.is_directory()) videos.push_back(entry.path());
    }
    std::sort(videos.begin(), videos.end());
    for (const auto& dir : videos) import_video(dir);
    return out;
}

}  // namespace mvp::eval
