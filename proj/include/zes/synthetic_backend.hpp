#pragma once

#include "zes/backend.hpp"
#include "zes/scene.hpp"

#include <map>
#include <vector>

namespace zes {

/// Deterministic oracle implementing the perception contract for a
/// generated Scene. Immutable after construction, so it is shareable.
///
/// Counter model: every object contributes one Gaussian kernel (sigma =
/// scene.density_kernel) at its centre. Against a single exemplar box the
/// kernel integrates to kCompatibleMass when the exemplar's majority pixel
/// class equals the object's class and the two box areas are within a factor
/// of kAreaFactor, otherwise to kIncompatibleMass. With several exemplars the
/// per-exemplar masses are averaged.
class SyntheticBackend final : public PerceptionBackend {
public:
    static constexpr double kAreaFactor = 2.25;
    static constexpr double kCompatibleMass = 1.03;
    static constexpr double kIncompatibleMass = 0.25;
    static constexpr double kSingleConfidence = 0.95;
    static constexpr double kMergedConfidence = 0.75;
    static constexpr double kConfidenceJitter = 0.05;
    static constexpr int kFeatureChannels = 256;
    static constexpr int kFeatureStride = 4;
    static constexpr int kUpsampleFactor = 4;

    explicit SyntheticBackend(Scene scene);

    BackendCapabilities capabilities() const override;
    ScalarMap text_similarity(const ImageRef& image, const ClassPrompt& prompt) const override;
    std::vector<Detection> detect(const ImageRef& image, const ClassPrompt& prompt, double threshold) const override;
    std::optional<Mask> segment_point(const ImageRef& image, Point point) const override;
    FeatureMap feature_map(const ImageRef& image) const override;
    ScalarMap count_density(const ImageRef& image, std::span<const BBox> exemplars) const override;

    const Scene& scene() const { return scene_; }
    const GroundTruth& ground_truth() const { return truth_; }
    ImageRef image() const;

    // Unit class vector used by the feature oracle.
    const std::vector<double>& class_vector(int class_id) const;
    // Class owning the most pixels of the box (background included; lower id
    // on ties).
    int majority_class(const BBox& box) const;
    // Kernel mass an object receives from a single exemplar.
    double compatibility(std::size_t object, const BBox& exemplar) const;

private:
    void check_image(const ImageRef& image) const;
    int pixel_class(int x, int y) const;
    double mass_for(std::size_t object, double exemplar_area, int exemplar_class) const;

    Scene scene_;
    GroundTruth truth_;
    std::vector<Mask> object_masks_;
    Mask background_mask_;
    std::map<int, std::vector<double>> class_vectors_;
};

} // namespace zes
