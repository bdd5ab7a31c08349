#include "zes/dge.hpp"

#include "zes/errors.hpp"
#include "zes/fce.hpp"

#include <algorithm>
#include <cmath>

namespace zes {

double gges_score(double c_close, double entropy, double alpha)
{
    return alpha * c_close + (1.0 - alpha) * (1.0 - entropy);
}

double count_closeness(double roi, double pseudo_gt, double bandwidth)
{
    return std::exp(-std::abs(roi - pseudo_gt) / bandwidth);
}

std::vector<Point> p2p_prompts(const ScalarMap& density, std::span<const Detection> detections,
                               const PipelineConfig& cfg)
{
    const auto stats = density_stats(density);
    auto peaks = local_peaks(density, stats.threshold, cfg.peak_window);
    if (detections.empty()) {
        return peaks;
    }
    std::erase_if(peaks, [&](const Point& p) {
        return std::none_of(detections.begin(), detections.end(), [&](const Detection& d) { return d.box.contains(p); });
    });
    return peaks;
}

std::vector<CandidateBox> prompts_to_candidates(const ImageRef& image, std::span<const Point> points,
                                                const ScalarMap& density, const PerceptionBackend& segmenter)
{
    std::vector<CandidateBox> out;
    for (const auto& p : points) {
        if (p.x < 0 || p.y < 0 || p.x >= image.width || p.y >= image.height) {
            throw BoundsError("prompt point outside the image");
        }
        auto mask = segmenter.segment_point(image, p);
        if (!mask || mask->empty()) {
            continue;
        }
        const BBox box = mask_to_bbox(*mask);
        if (std::any_of(out.begin(), out.end(), [&](const CandidateBox& c) { return c.box == box; })) {
            continue;
        }
        out.push_back(CandidateBox{box, std::move(*mask), roi_count(density, box), p});
    }
    return out;
}

std::vector<CandidateBox> filter_single_instance(std::span<const CandidateBox> candidates, const PipelineConfig& cfg)
{
    std::vector<CandidateBox> kept;
    for (const auto& c : candidates) {
        if (c.roi > cfg.roi_low && c.roi < cfg.roi_high) {
            kept.push_back(c);
        }
    }
    return kept;
}

ScalarMap resample_bilinear(const ScalarMap& grid, int width, int height)
{
    ScalarMap out(width, height);
    const double sx = static_cast<double>(grid.width()) / width;
    const double sy = static_cast<double>(grid.height()) / height;
    for (int y = 0; y < height; ++y) {
        const double gy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(grid.height() - 1));
        const int y0 = static_cast<int>(std::floor(gy));
        const int y1 = std::min(y0 + 1, grid.height() - 1);
        const double fy = gy - y0;
        for (int x = 0; x < width; ++x) {
            const double gx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(grid.width() - 1));
            const int x0 = static_cast<int>(std::floor(gx));
            const int x1 = std::min(x0 + 1, grid.width() - 1);
            const double fx = gx - x0;
            // a + f * (b - a) reproduces equal neighbours exactly
            const double top = grid(x0, y0) + fx * (grid(x1, y0) - grid(x0, y0));
            const double bottom = grid(x0, y1) + fx * (grid(x1, y1) - grid(x0, y1));
            out(x, y) = top + fy * (bottom - top);
        }
    }
    return out;
}

ScalarMap exemplar_similarity_map(const ImageRef& image, const BBox& anchor, const FeatureMap& features)
{
    const Descriptor anchor_desc = pool_descriptor(features, anchor, image);
    const auto a = anchor_desc.values();

    ScalarMap cells(features.width(), features.height());
    for (int y = 0; y < features.height(); ++y) {
        for (int x = 0; x < features.width(); ++x) {
            const auto f = features.cell(x, y);
            double dot = 0.0, sq = 0.0;
            for (std::size_t c = 0; c < f.size(); ++c) {
                dot += a[c] * f[c];
                sq += static_cast<double>(f[c]) * f[c];
            }
            cells(x, y) = sq > 0.0 ? dot / std::sqrt(sq) : 0.0;
        }
    }

    ScalarMap out = (cells.width() == image.width && cells.height() == image.height)
                        ? std::move(cells)
                        : resample_bilinear(cells, image.width, image.height);
    auto vals = out.values();
    const auto [lo_it, hi_it] = std::minmax_element(vals.begin(), vals.end());
    const double lo = *lo_it, range = *hi_it - *lo_it;
    for (double& v : vals) {
        v = range > 0.0 ? (v - lo) / range : 0.5;
    }
    return out;
}

std::optional<GgesOutcome> gges_select(std::span<const CandidateBox> candidates, const ScalarMap* sim_map,
                                       const PipelineConfig& cfg)
{
    if (candidates.empty()) {
        return std::nullopt;
    }
    std::vector<double> rois;
    rois.reserve(candidates.size());
    for (const auto& c : candidates) {
        rois.push_back(c.roi);
    }

    GgesOutcome out;
    out.kde = kde_fit(rois);
    for (const auto& c : candidates) {
        GgesScore s;
        s.candidate = c;
        s.c_close = count_closeness(c.roi, out.kde.mode, out.kde.bandwidth);
        s.entropy = sim_map ? normalized_entropy(*sim_map, c.box, cfg.entropy_bins) : 0.5;
        s.score = gges_score(s.c_close, s.entropy, cfg.alpha);
        out.ranked.push_back(std::move(s));
    }
    std::stable_sort(out.ranked.begin(), out.ranked.end(),
                     [](const GgesScore& a, const GgesScore& b) { return a.score > b.score; });
    out.exemplar = Exemplar{out.ranked.front().candidate.box, Stage::DGE, out.ranked.front().score};
    return out;
}

} // namespace zes
