#pragma once

#include "zes/backend.hpp"
#include "zes/core_types.hpp"
#include "zes/map_analytics.hpp"

#include <optional>
#include <span>
#include <vector>

namespace zes {

struct CandidateBox {
    BBox box;
    Mask mask;
    double roi = 0.0; // integrated density inside box
    Point source_peak;
};

struct GgesScore {
    CandidateBox candidate;
    double c_close = 0.0;
    double entropy = 0.0;
    double score = 0.0;
};

// alpha * c_close + (1 - alpha) * (1 - entropy)
double gges_score(double c_close, double entropy, double alpha);

// exp(-|roi - pseudo_gt| / bandwidth), in (0, 1].
double count_closeness(double roi, double pseudo_gt, double bandwidth);

// Density peaks at or above mean + 2 sd, kept only when they fall inside at
// least one detection box. With no detections the gate is skipped.
std::vector<Point> p2p_prompts(const ScalarMap& density, std::span<const Detection> detections,
                               const PipelineConfig& cfg);

// Point prompt -> mask -> tight box -> RoI count. Prompts with no mask are
// skipped; repeated boxes keep their first occurrence.
std::vector<CandidateBox> prompts_to_candidates(const ImageRef& image, std::span<const Point> points,
                                                const ScalarMap& density, const PerceptionBackend& segmenter);

// Keeps candidates with roi strictly inside (roi_low, roi_high).
std::vector<CandidateBox> filter_single_instance(std::span<const CandidateBox> candidates, const PipelineConfig& cfg);

// Cosine similarity of every feature cell against the anchor's pooled
// descriptor, resampled bilinearly to image resolution and min-max
// normalised to [0, 1] (a constant map becomes 0.5 everywhere).
ScalarMap exemplar_similarity_map(const ImageRef& image, const BBox& anchor, const FeatureMap& features);

// Bilinear resampling with pixel-centre alignment.
ScalarMap resample_bilinear(const ScalarMap& grid, int width, int height);

struct GgesOutcome {
    Exemplar exemplar;
    KdeEstimate kde;
    // Best first.
    std::vector<GgesScore> ranked;
};

// Pseudo-GT guided selection. `sim_map` may be null when the exemplar
// similarity map is unavailable; the entropy term then defaults to 0.5.
std::optional<GgesOutcome> gges_select(std::span<const CandidateBox> candidates, const ScalarMap* sim_map,
                                       const PipelineConfig& cfg);

} // namespace zes
