#pragma once

#include "zes/backend.hpp"
#include "zes/core_types.hpp"
#include "zes/dge.hpp"

#include <optional>
#include <span>
#include <vector>

namespace zes {

// Channel-wise mean over the projected cells of `box`, l2-normalised.
// Throws DegenerateDescriptorError when the mean is the zero vector.
Descriptor pool_descriptor(const FeatureMap& features, const BBox& box, const ImageRef& image);

struct ClusterResult {
    std::vector<int> assignments; // 0 or 1 per descriptor
    int majority_id = 0;
    Descriptor centroid_major;
    std::optional<Descriptor> centroid_minor;
    int iterations = 0;

    std::size_t size_of(int id) const;
};

/// Deterministic spherical 2-means. The first start seeds the centroids at
/// the least similar pair (first pair on ties); further starts pair each
/// descriptor with its least similar partner. Each start runs Lloyd rounds
/// (cluster 0 on cosine ties, at most 100) followed by single-point moves
/// that raise the total within-cluster cosine. The best start wins, earlier
/// starts on ties. The larger cluster is the majority; equal sizes resolve
/// to the cluster holding index 0.
/// Precondition: at least one descriptor.
ClusterResult cluster_two(std::span<const Descriptor> descriptors);

struct FresScore {
    CandidateBox candidate;
    double similarity = 0.0; // cosine to the majority centroid
};

struct FresOutcome {
    Exemplar exemplar;
    ClusterResult clusters;
    // Majority members only, best first.
    std::vector<FresScore> ranked;
};

// nullopt when every candidate pooled to a degenerate descriptor.
std::optional<FresOutcome> fres_select(std::span<const CandidateBox> candidates, const FeatureMap& features,
                                       const ImageRef& image);

struct FceOutcome {
    std::optional<FresOutcome> selection;
    std::size_t candidate_count = 0;
    std::size_t single_count = 0;
};

// Regenerates density anchored on `anchor`, repeats prompting and
// single-instance filtering, then selects by feature consensus.
FceOutcome fce_stage(const ImageRef& image, const BBox& anchor, std::span<const Detection> detections,
                     const PerceptionBackend& backend, const FeatureMap& features, const PipelineConfig& cfg);

} // namespace zes
