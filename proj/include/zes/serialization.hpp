#pragma once

#include "zes/core_types.hpp"
#include "zes/pipeline.hpp"
#include "zes/scene.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace zes {

using Json = nlohmann::json;

// PipelineConfig <-> JSON object with one key per field. Parsing starts from
// the defaults, so a partial document is fine; unknown keys and wrongly typed
// values throw ConfigError, and the result is validated.
Json config_to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const Json& doc);
PipelineConfig load_config(const std::filesystem::path& path);

Json scene_to_json(const Scene& scene);
// Throws ConfigError on a schema_version mismatch or malformed document.
Scene scene_from_json(const Json& doc);
Scene load_scene(const std::filesystem::path& path);
void save_scene(const Scene& scene, const std::filesystem::path& path);

Json result_to_json(const PipelineResult& result);
PipelineResult result_from_json(const Json& doc);

Json box_to_json(const BBox& box);
BBox box_from_json(const Json& doc);

// Minimal .npy (format 1.0) container: dtype descriptor, C-order shape,
// little-endian payload. Supported dtypes: <u1, <i4, <f4, <f8.
struct NpyArray {
    std::string dtype;
    std::vector<std::size_t> shape;
    std::vector<std::uint8_t> bytes;

    std::size_t element_count() const;
    bool operator==(const NpyArray&) const = default;
};

NpyArray npy_from_map(const ScalarMap& map);
NpyArray npy_from_labels(const std::vector<std::int32_t>& labels, int width, int height);
NpyArray npy_from_boxes(const std::vector<BBox>& boxes);
ScalarMap map_from_npy(const NpyArray& array);

void write_npy(const NpyArray& array, const std::filesystem::path& path);
NpyArray read_npy(const std::filesystem::path& path);

// Writes <stem>.json plus <stem>_density.npy, <stem>_similarity.npy,
// <stem>_labels.npy and <stem>_boxes.npy into dir.
void save_scene_bundle(const Scene& scene, const std::filesystem::path& dir, const std::string& stem);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace zes
