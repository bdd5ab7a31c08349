#include "zes/dae.hpp"

#include "zes/errors.hpp"
#include "zes/map_analytics.hpp"

#include <algorithm>
#include <limits>

namespace zes {

double box_score(double confidence, double entropy, double alpha)
{
    return alpha * confidence + (1.0 - alpha) * (1.0 - entropy);
}

double mask_score(double sim, double entropy, double w_sim, double w_ent)
{
    return w_sim * sim + w_ent * (1.0 - entropy);
}

std::vector<ScoredBox> score_boxes(std::span<const Detection> detections, const ScalarMap& similarity,
                                   const PipelineConfig& cfg)
{
    std::vector<ScoredBox> scored;
    scored.reserve(detections.size());
    for (const auto& det : detections) {
        const double h = normalized_entropy(similarity, det.box, cfg.entropy_bins);
        scored.push_back({det, h, box_score(det.confidence, h, cfg.alpha)});
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const ScoredBox& a, const ScoredBox& b) { return a.score > b.score; });
    return scored;
}

PeakRelaxation relax_peaks(const ScalarMap& similarity, const BBox& coarse, const PipelineConfig& cfg)
{
    require_in_bounds(coarse, similarity.width(), similarity.height());
    const PercentileTable table(similarity);

    // Local maxima of the whole map do not depend on the threshold, so find
    // them once and filter per percentile.
    std::vector<Point> in_box;
    for (const auto& p : local_peaks(similarity, -std::numeric_limits<double>::infinity(), cfg.peak_window)) {
        if (coarse.contains(p)) {
            in_box.push_back(p);
        }
    }

    PeakRelaxation out;
    double p = cfg.percentile_start;
    while (true) {
        ++out.iterations;
        const double tau = table.threshold(p);
        for (const auto& q : in_box) {
            if (similarity(q.x, q.y) >= tau) {
                out.peaks.push_back(q);
            }
        }
        if (!out.peaks.empty()) {
            // in_box is already sorted by descending value.
            if (out.peaks.size() > static_cast<std::size_t>(cfg.k_peaks)) {
                out.peaks.resize(static_cast<std::size_t>(cfg.k_peaks));
            }
            out.final_p = p;
            return out;
        }
        if (p <= 0.0) {
            break;
        }
        p = std::max(0.0, p - cfg.percentile_step);
    }

    Point best{coarse.x0, coarse.y0};
    for (int y = coarse.y0; y < coarse.y1; ++y) {
        for (int x = coarse.x0; x < coarse.x1; ++x) {
            if (similarity(x, y) > similarity(best.x, best.y)) {
                best = {x, y};
            }
        }
    }
    out.peaks = {best};
    out.final_p = 0.0;
    out.argmax_fallback = true;
    return out;
}

std::optional<SsesOutcome> sses_select(const ImageRef& image, std::span<const Point> peaks,
                                       const ScalarMap& similarity, const PerceptionBackend& segmenter,
                                       const PipelineConfig& cfg)
{
    const PercentileTable table(similarity);
    std::vector<ScoredMask> masks;
    for (const auto& peak : peaks) {
        auto mask = segmenter.segment_point(image, peak);
        if (!mask || mask->empty()) {
            continue;
        }
        if (mask->width() != similarity.width() || mask->height() != similarity.height()) {
            throw BackendError("segmenter returned a mask of the wrong size");
        }
        const bool duplicate =
            std::any_of(masks.begin(), masks.end(), [&](const ScoredMask& m) { return m.mask == *mask; });
        if (duplicate) {
            continue;
        }

        std::vector<double> values;
        double rank_sum = 0.0;
        for (int y = 0; y < mask->height(); ++y) {
            for (int x = 0; x < mask->width(); ++x) {
                if (mask->contains(x, y)) {
                    const double v = similarity(x, y);
                    values.push_back(v);
                    rank_sum += table.rank(v);
                }
            }
        }
        ScoredMask sm;
        sm.sim = rank_sum / static_cast<double>(values.size());
        sm.entropy = normalized_entropy(values, cfg.entropy_bins);
        sm.score = mask_score(sm.sim, sm.entropy, cfg.w_sim, cfg.w_ent);
        sm.box = mask_to_bbox(*mask);
        sm.source_peak = peak;
        sm.mask = std::move(*mask);
        masks.push_back(std::move(sm));
    }
    if (masks.empty()) {
        return std::nullopt;
    }
    std::stable_sort(masks.begin(), masks.end(),
                     [](const ScoredMask& a, const ScoredMask& b) { return a.score > b.score; });
    SsesOutcome out;
    out.exemplar = Exemplar{masks.front().box, Stage::DAE, masks.front().score};
    out.ranked = std::move(masks);
    return out;
}

} // namespace zes
