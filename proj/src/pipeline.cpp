#include "zes/pipeline.hpp"

#include "zes/dae.hpp"
#include "zes/dge.hpp"
#include "zes/errors.hpp"
#include "zes/fce.hpp"

#include <algorithm>
#include <chrono>

#include <fmt/format.h>

namespace zes {

bool PipelineResult::has_flag(std::string_view flag) const
{
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

std::vector<BBox> PipelineResult::exemplar_boxes() const
{
    std::vector<BBox> boxes;
    for (const auto& e : exemplars) {
        boxes.push_back(e.box);
    }
    return boxes;
}

bool PipelineResult::operator==(const PipelineResult& o) const
{
    return exemplars == o.exemplars && final_count == o.final_count && empty == o.empty && dae == o.dae &&
           dge == o.dge && fce == o.fce && flags == o.flags && dae_ranked == o.dae_ranked &&
           dge_ranked == o.dge_ranked && fce_ranked == o.fce_ranked;
}

double count_with(const ImageRef& image, const PerceptionBackend& backend, std::span<const BBox> exemplars)
{
    return backend.count_density(image, exemplars).sum();
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <typename F>
auto in_stage(std::string_view stage, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const BackendError& e) {
        throw BackendError(fmt::format("{}: {}", stage, e.what()));
    }
}

template <typename T, typename Proj>
std::vector<BBox> top_boxes(const std::vector<T>& ranked, Proj box_of)
{
    std::vector<BBox> out;
    for (const auto& r : ranked) {
        if (out.size() == 3) {
            break;
        }
        out.push_back(box_of(r));
    }
    return out;
}

} // namespace

PipelineResult run_pipeline(const ImageRef& image, const ClassPrompt& prompt, const PerceptionBackend& backend,
                            const PipelineConfig& cfg, PipelineMaps* maps)
{
    cfg.validate();
    const auto caps = backend.capabilities();
    if (!caps.complete()) {
        throw ConfigError(fmt::format("backend lacks required capabilities: {}", caps.missing()));
    }

    const auto t_start = Clock::now();
    PipelineResult result;

    // ---- DAE -------------------------------------------------------------
    auto t0 = Clock::now();
    const ScalarMap similarity = in_stage("DAE", [&] { return backend.text_similarity(image, prompt); });
    const auto detections = in_stage("DAE", [&] { return backend.detect(image, prompt, cfg.detection_threshold); });
    if (maps) {
        maps->similarity = similarity;
    }
    if (detections.empty()) {
        result.flags.emplace_back("no_detections");
    }

    const auto scored = score_boxes(detections, similarity, cfg);
    const BBox coarse = scored.empty() ? full_box(image.width, image.height) : scored.front().detection.box;
    const auto relaxed = relax_peaks(similarity, coarse, cfg);
    result.dae.final_p = relaxed.final_p;

    if (detections.empty() && relaxed.argmax_fallback) {
        result.empty = true;
        result.flags.emplace_back("empty");
        result.timings.dae_ms = ms_since(t0);
        result.timings.total_ms = ms_since(t_start);
        return result;
    }

    const auto sses = in_stage("DAE", [&] { return sses_select(image, relaxed.peaks, similarity, backend, cfg); });
    Exemplar dae_exemplar;
    if (sses) {
        dae_exemplar = sses->exemplar;
        result.dae.candidate_count = sses->ranked.size();
        result.dae_ranked = top_boxes(sses->ranked, [](const ScoredMask& m) { return m.box; });
    } else if (!scored.empty()) {
        dae_exemplar = Exemplar{scored.front().detection.box, Stage::DAE, scored.front().score};
        result.dae.fallback_used = true;
        result.flags.emplace_back("dae_fallback");
        result.dae_ranked = top_boxes(scored, [](const ScoredBox& s) { return s.detection.box; });
    } else {
        result.empty = true;
        result.flags.emplace_back("empty");
        result.timings.dae_ms = ms_since(t0);
        result.timings.total_ms = ms_since(t_start);
        return result;
    }
    result.dae.winner_score = dae_exemplar.score;
    result.exemplars.push_back(dae_exemplar);
    result.timings.dae_ms = ms_since(t0);

    // ---- DGE -------------------------------------------------------------
    t0 = Clock::now();
    std::optional<FeatureMap> features;
    try {
        features = backend.feature_map(image);
    } catch (const BackendError&) {
        result.flags.emplace_back("dge_degraded");
    }

    const BBox dae_anchor[] = {dae_exemplar.box};
    const ScalarMap dae_density = in_stage("DGE", [&] { return backend.count_density(image, dae_anchor); });
    if (maps) {
        maps->dae_density = dae_density;
    }
    const auto prompts = p2p_prompts(dae_density, detections, cfg);
    const auto candidates =
        in_stage("DGE", [&] { return prompts_to_candidates(image, prompts, dae_density, backend); });
    const auto single = filter_single_instance(candidates, cfg);
    result.dge.candidate_count = single.size();

    std::optional<ScalarMap> exemplar_sim;
    if (features) {
        exemplar_sim = exemplar_similarity_map(image, dae_exemplar.box, *features);
    }
    const auto gges = gges_select(single, exemplar_sim ? &*exemplar_sim : nullptr, cfg);
    Exemplar dge_exemplar;
    if (gges) {
        dge_exemplar = gges->exemplar;
        result.dge.pseudo_gt = gges->kde.mode;
        result.dge_ranked = top_boxes(gges->ranked, [](const GgesScore& s) { return s.candidate.box; });
    } else {
        dge_exemplar = dae_exemplar;
        result.dge.fallback_used = true;
        result.flags.emplace_back("dge_fallback");
    }
    result.dge.winner_score = dge_exemplar.score;
    result.exemplars.push_back(dge_exemplar);
    result.timings.dge_ms = ms_since(t0);

    // ---- FCE -------------------------------------------------------------
    t0 = Clock::now();
    std::optional<FresOutcome> fres;
    if (features) {
        // A failed FCE call costs the slot, not the run.
        try {
            const auto fce = fce_stage(image, dge_exemplar.box, detections, backend, *features, cfg);
            result.fce.candidate_count = fce.single_count;
            fres = fce.selection;
        } catch (const BackendError&) {
            result.flags.emplace_back("fce_backend_error");
        }
    }
    Exemplar fce_exemplar;
    if (fres) {
        fce_exemplar = fres->exemplar;
        result.fce.majority_size = fres->clusters.size_of(fres->clusters.majority_id);
        result.fce_ranked = top_boxes(fres->ranked, [](const FresScore& s) { return s.candidate.box; });
    } else {
        fce_exemplar = dge_exemplar;
        result.fce.fallback_used = true;
        result.flags.emplace_back("fce_fallback");
    }
    result.fce.winner_score = fce_exemplar.score;
    result.exemplars.push_back(fce_exemplar);
    result.timings.fce_ms = ms_since(t0);

    // ---- final count -----------------------------------------------------
    t0 = Clock::now();
    const auto boxes = result.exemplar_boxes();
    if (cfg.average_single_exemplar_counts) {
        double total = 0.0;
        for (const auto& b : boxes) {
            const BBox one[] = {b};
            total += in_stage("count", [&] { return count_with(image, backend, one); });
        }
        result.final_count = total / static_cast<double>(boxes.size());
        if (maps) {
            maps->final_density = backend.count_density(image, boxes);
        }
    } else {
        ScalarMap final_density = in_stage("count", [&] { return backend.count_density(image, boxes); });
        result.final_count = final_density.sum();
        if (maps) {
            maps->final_density = std::move(final_density);
        }
    }
    result.timings.count_ms = ms_since(t0);
    result.timings.total_ms = ms_since(t_start);
    return result;
}

} // namespace zes
