#include "gvf/manifest.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace gvf {

using nlohmann::json;

void validate_entry(const ManifestEntry& e) {
    if (e.label != "real" && e.label != "fake")
        throw std::invalid_argument("manifest: label must be real|fake, got '" + e.label +
                                    "'");
    if (e.is_fake() && !e.generator)
        throw std::invalid_argument("manifest: fake entry missing generator id: " + e.path);
    if (!e.is_fake() && e.generator)
        throw std::invalid_argument("manifest: real entry carries generator id: " + e.path);
    if (!e.is_fake() && e.source)
        throw std::invalid_argument("manifest: real entry carries a source id: " + e.path);
}

std::string manifest_entry_to_json(const ManifestEntry& e) {
    json j;
    j["path"] = e.path;
    j["label"] = e.label;
    if (e.generator) j["generator"] = *e.generator;
    if (e.source) j["source"] = *e.source;
    j["family"] = e.family;
    j["frames"] = e.frames;
    j["seed"] = e.seed;
    return j.dump();
}

ManifestEntry manifest_entry_from_json(const std::string& line) {
    json j = json::parse(line);
    ManifestEntry e;
    e.path = j.at("path").get<std::string>();
    e.label = j.at("label").get<std::string>();
    if (j.contains("generator")) e.generator = j["generator"].get<std::string>();
    if (j.contains("source")) e.source = j["source"].get<std::string>();
    e.family = j.at("family").get<std::string>();
    e.frames = j.at("frames").get<std::size_t>();
    e.seed = j.at("seed").get<std::uint64_t>();
    validate_entry(e);
    return e;
}

void save_manifest(const std::vector<ManifestEntry>& entries,
                   const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("manifest: cannot write " + path.string());
    for (const auto& e : entries) {
        validate_entry(e);
        f << manifest_entry_to_json(e) << "\n";
    }
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("manifest: cannot open " + path.string());
    std::vector<ManifestEntry> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        out.push_back(manifest_entry_from_json(line));
    }
    return out;
}

}  // namespace gvf
