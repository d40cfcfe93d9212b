#pragma once

#include "flakeseg/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace flakeseg {

// One dataset record. `image` is required; the other fields appear as the
// pipeline stages annotate the manifest (mask from the synth generator or
// the labeling step, group from clustering, split from stratification).
struct ManifestRecord {
    std::string image;
    std::string mask;            // empty when absent
    std::optional<int> group;
    std::string split;           // empty when absent; "train"/"test"/"fold-k"

    bool has_mask() const { return !mask.empty(); }
    bool has_split() const { return !split.empty(); }
};

// The dataset backbone flowing between pipeline stages. Stages annotate
// records in place rather than copying image data.
struct DatasetManifest {
    std::vector<ManifestRecord> records;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
};

// JSON-lines serialization, one record per line with fields `image`,
// `mask`, `group`, `split`; absent fields are omitted. Relative paths in
// the file are resolved against the manifest's directory on load, and
// paths under the target directory are written back as relative on save,
// so a corpus directory stays relocatable. Image paths must be unique.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

} // namespace flakeseg
