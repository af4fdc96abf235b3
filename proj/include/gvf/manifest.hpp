#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <cstdint>

namespace gvf {

// One sample in a corpus manifest (serialized as one JSON object per line).
struct ManifestEntry {
    std::string path;
    std::string label;                    // "real" | "fake"
    std::optional<std::string> generator; // present iff fake; "A+B" for chained
    std::optional<std::string> source;    // real sample id a conditioned fake started from
    std::string family;                   // scene-family id (dataset role)
    std::size_t frames = 0;
    std::uint64_t seed = 0;

    bool is_fake() const { return label == "fake"; }
};

std::string manifest_entry_to_json(const ManifestEntry& e);
ManifestEntry manifest_entry_from_json(const std::string& line);

void save_manifest(const std::vector<ManifestEntry>& entries,
                   const std::filesystem::path& path);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

// Validates label/generator consistency; throws on violation.
void validate_entry(const ManifestEntry& e);

}  // namespace gvf
