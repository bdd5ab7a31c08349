#pragma once

#include "zes/core_types.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace zes {

struct BackendCapabilities {
    bool has_text_similarity = false;
    bool has_detection = false;
    bool has_point_segmentation = false;
    bool has_feature_map = false;
    bool has_counter = false;
    int feature_channels = 0;
    // Safe for concurrent callers.
    bool shareable = false;

    bool complete() const
    {
        return has_text_similarity && has_detection && has_point_segmentation && has_feature_map && has_counter;
    }
    // Names of missing capabilities, comma separated; empty when complete.
    std::string missing() const;

    bool operator==(const BackendCapabilities&) const = default;
};

/// Everything neural sits behind this contract. Implementations throw
/// BackendError on hard failures (unknown image, transport, protocol).
class PerceptionBackend {
public:
    virtual ~PerceptionBackend() = default;

    virtual BackendCapabilities capabilities() const = 0;

    // Text-image alignment, values in [0, 1], image resolution.
    virtual ScalarMap text_similarity(const ImageRef& image, const ClassPrompt& prompt) const = 0;

    // Open-vocabulary boxes with confidence >= threshold.
    virtual std::vector<Detection> detect(const ImageRef& image, const ClassPrompt& prompt, double threshold) const = 0;

    // Positive point prompt -> mask; nullopt when the segmenter produced nothing.
    virtual std::optional<Mask> segment_point(const ImageRef& image, Point point) const = 0;

    // Upsampled dense features (grid at least a quarter of image resolution).
    virtual FeatureMap feature_map(const ImageRef& image) const = 0;

    // Exemplar-conditioned density map at image resolution, nonnegative.
    // Throws ContractError on an empty exemplar list.
    virtual ScalarMap count_density(const ImageRef& image, std::span<const BBox> exemplars) const = 0;
};

} // namespace zes
