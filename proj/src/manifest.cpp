#include "flakeseg/manifest.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace fs = std::filesystem;

namespace flakeseg {

namespace {

std::string resolve_against(const fs::path& base, const std::string& p) {
    fs::path path(p);
    if (path.is_absolute()) return path.lexically_normal().string();
    return (base / path).lexically_normal().string();
}

std::string relativize_against(const fs::path& base, const std::string& p) {
    const fs::path rel = fs::path(p).lexically_relative(base);
    // Keep the absolute form when the path does not live under the base
    // directory; ".." chains would break if the manifest moved.
    if (rel.empty() || rel.native().starts_with("..")) return p;
    return rel.generic_string();
}

} // namespace

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(path + ": cannot open manifest");
    const fs::path base = fs::path(path).parent_path();

    DatasetManifest manifest;
    std::unordered_set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.is_object())
            throw Error(path + ":" + std::to_string(lineno) + ": record is not a JSON object");

        ManifestRecord rec;
        for (const auto& [key, value] : j.items()) {
            if (key == "image") rec.image = resolve_against(base, value.get<std::string>());
            else if (key == "mask") rec.mask = resolve_against(base, value.get<std::string>());
            else if (key == "group") rec.group = value.get<int>();
            else if (key == "split") rec.split = value.get<std::string>();
            else
                throw Error(path + ":" + std::to_string(lineno) + ": unknown field `" + key + "`");
        }
        if (rec.image.empty())
            throw Error(path + ":" + std::to_string(lineno) + ": missing `image` field");
        if (!seen.insert(rec.image).second)
            throw Error(path + ":" + std::to_string(lineno) + ": duplicate image path " + rec.image);
        manifest.records.push_back(std::move(rec));
    }
    return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    const fs::path base = fs::path(path).parent_path();
    std::unordered_set<std::string> seen;
    std::ostringstream out;
    for (const ManifestRecord& rec : manifest.records) {
        if (rec.image.empty()) throw Error("manifest record with empty image path");
        if (!seen.insert(rec.image).second)
            throw Error("duplicate image path in manifest: " + rec.image);
        nlohmann::json j;
        j["image"] = relativize_against(base, rec.image);
        if (rec.has_mask()) j["mask"] = relativize_against(base, rec.mask);
        if (rec.group) j["group"] = *rec.group;
        if (rec.has_split()) j["split"] = rec.split;
        out << j.dump() << '\n';
    }
    atomic_write_text(path, out.str());
}

} // namespace flakeseg
