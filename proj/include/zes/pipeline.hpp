#pragma once

#include "zes/backend.hpp"
#include "zes/core_types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace zes {

struct StageDiagnostics {
    std::size_t candidate_count = 0;
    bool fallback_used = false;
    double winner_score = 0.0;
    std::optional<double> final_p;              // DAE only
    std::optional<double> pseudo_gt;            // DGE only
    std::optional<std::size_t> majority_size;   // FCE only

    bool operator==(const StageDiagnostics&) const = default;
};

struct StageTimings {
    double dae_ms = 0.0;
    double dge_ms = 0.0;
    double fce_ms = 0.0;
    double count_ms = 0.0;
    double total_ms = 0.0;

    bool operator==(const StageTimings&) const = default;
};

struct PipelineResult {
    // Slots in stage order DAE, DGE, FCE. A missing stage is filled by
    // duplicating the previous slot, keeping the producer's stage tag.
    // Empty only when the run found nothing to anchor on (see `empty`).
    ExemplarSet exemplars;
    double final_count = 0.0;
    bool empty = false;
    StageDiagnostics dae;
    StageDiagnostics dge;
    StageDiagnostics fce;
    // Run notes such as "no_detections", "dae_fallback", "dge_fallback",
    // "dge_degraded", "fce_backend_error", "fce_fallback", "empty".
    std::vector<std::string> flags;
    // Up to three best boxes per stage, best first.
    std::vector<BBox> dae_ranked;
    std::vector<BBox> dge_ranked;
    std::vector<BBox> fce_ranked;
    StageTimings timings;

    bool has_flag(std::string_view flag) const;
    std::vector<BBox> exemplar_boxes() const;

    // Equality ignores timings.
    bool operator==(const PipelineResult& other) const;
};

// Intermediate maps a caller may want to keep (artifact emission).
struct PipelineMaps {
    ScalarMap similarity;
    ScalarMap dae_density;
    ScalarMap final_density;
};

/// Full DAE -> DGE -> FCE run for one image. Throws ConfigError for an
/// invalid config or an incomplete backend; backend failures surface as
/// BackendError prefixed with the stage that hit them, except in FCE where
/// they fall back to duplicating the DGE slot.
PipelineResult run_pipeline(const ImageRef& image, const ClassPrompt& prompt, const PerceptionBackend& backend,
                            const PipelineConfig& cfg, PipelineMaps* maps = nullptr);

// Total of the counter's density map for an exemplar list.
double count_with(const ImageRef& image, const PerceptionBackend& backend, std::span<const BBox> exemplars);

} // namespace zes
