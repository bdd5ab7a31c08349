#pragma once

#include "zes/core_types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace zes {

/// Filled ellipse. Pixel (x, y) belongs to it when the normalised elliptical
/// distance from the centre is at most one.
struct SceneObject {
    double cx = 0.0;
    double cy = 0.0;
    double semi_a = 0.0;
    double semi_b = 0.0;
    double rotation = 0.0; // radians
    int class_id = 0;

    // Squared normalised elliptical distance of (x, y) from the centre.
    double distance2(double x, double y) const;
    bool covers(int x, int y) const { return distance2(x, y) <= 1.0; }
    // Bounding box of the rasterised ellipse (not clipped).
    BBox raster_box() const;

    bool operator==(const SceneObject&) const = default;
};

struct Scene {
    int width = 0;
    int height = 0;
    std::uint64_t seed = 0;
    std::vector<SceneObject> objects;
    double merge_rate = 0.0;
    double similarity_noise = 0.0;
    double density_kernel = 1.0;
    double feature_noise = 0.0;
    int background_class_id = 255;

    std::size_t count_of(int class_id) const;

    bool operator==(const Scene&) const = default;
};

inline constexpr int kSceneSchemaVersion = 1;
inline constexpr int kTargetClass = 0;
inline constexpr int kDistractorClass = 1;

struct SceneParams {
    int n_objects = 10;         // target-class objects
    int n_distractors = 0;      // objects of kDistractorClass
    double merge_rate = 0.0;
    double semi_axis_min = 5.0;
    double semi_axis_max = 7.0;
    // Image side is derived from the expected object area when width/height
    // are zero.
    double fill_fraction = 0.22;
    int width = 0;
    int height = 0;
    double similarity_noise = 0.03;
    double density_kernel = 1.0;
    double feature_noise = 0.1;
    double max_overlap = 0.3;
    int max_attempts = 10000;
};

/// Deterministic in `seed`. Objects are rejection-sampled so that pairwise
/// overlap stays within max_overlap of the smaller ellipse and no object
/// centre falls inside another object's box. Throws PlacementError when the
/// attempt budget runs out.
Scene generate_scene(const SceneParams& params, std::uint64_t seed);

// Prompt text used for a class id ("class_<id>").
std::string class_prompt_text(int class_id);
// Parses "class_<id>" or a bare integer; -1 when the text names no class.
int class_from_prompt(std::string_view text);

struct GroundTruth {
    std::vector<BBox> boxes;           // per object
    std::vector<int> class_ids;        // per object
    std::vector<std::int32_t> labels;  // per pixel: owning object index or -1
    ScalarMap density;                 // unit-integral kernels, target class
    ScalarMap similarity;              // noise-free target-class similarity
    std::size_t count = 0;             // target-class objects
};

GroundTruth render_ground_truth(const Scene& scene, int target_class = kTargetClass);

struct SuiteSpec {
    int n_scenes = 100;
    std::uint64_t base_seed = 0;
    int objects_min = 5;
    int objects_max = 50;
    std::vector<double> merge_rates{0.0, 0.5, 0.8};
    int n_distractors = 0;
};

// Scene i uses seed base_seed + i, an object count drawn from that seed and
// merge_rates[i % size].
std::vector<Scene> generate_suite(const SuiteSpec& spec, const SceneParams& base = {});

} // namespace zes
