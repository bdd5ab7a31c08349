#pragma once

#include "zes/backend.hpp"
#include "zes/core_types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace zes {

/// Detector box with its similarity entropy and composite score.
struct ScoredBox {
    Detection detection;
    double entropy = 0.0;
    double score = 0.0;
};

// alpha * confidence + (1 - alpha) * (1 - entropy)
double box_score(double confidence, double entropy, double alpha);

// All detections scored over the similarity map, best first (stable on ties).
// Empty input yields an empty list; the caller treats that as "no detections".
std::vector<ScoredBox> score_boxes(std::span<const Detection> detections, const ScalarMap& similarity,
                                   const PipelineConfig& cfg);

struct PeakRelaxation {
    std::vector<Point> peaks;
    double final_p = 0.0;
    int iterations = 0;
    // True when no local peak qualified at any percentile and the in-box
    // argmax was returned instead.
    bool argmax_fallback = false;
};

// Percentile relaxation inside the coarse box: thresholds come from the full
// map, peaks are local maxima of the full map that fall in the box. Stops at
// the first percentile giving at least one peak and keeps the top k.
PeakRelaxation relax_peaks(const ScalarMap& similarity, const BBox& coarse, const PipelineConfig& cfg);

struct ScoredMask {
    Mask mask;
    BBox box;
    double sim = 0.0;
    double entropy = 0.0;
    double score = 0.0;
    Point source_peak;
};

// w_sim * sim + w_ent * (1 - entropy)
double mask_score(double sim, double entropy, double w_sim, double w_ent);

struct SsesOutcome {
    Exemplar exemplar;
    // Distinct masks, best first.
    std::vector<ScoredMask> ranked;
};

// Prompts the segmenter at every peak and keeps the mask with the highest
// composite score. nullopt when no peak produced a mask.
std::optional<SsesOutcome> sses_select(const ImageRef& image, std::span<const Point> peaks,
                                       const ScalarMap& similarity, const PerceptionBackend& segmenter,
                                       const PipelineConfig& cfg);

} // namespace zes
