#include "zes/fce.hpp"

#include "zes/errors.hpp"
#include "zes/map_analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace zes {

Descriptor pool_descriptor(const FeatureMap& features, const BBox& box, const ImageRef& image)
{
    const BBox cells = project_box(box, image, features.width(), features.height());
    std::vector<double> mean(static_cast<std::size_t>(features.channels()), 0.0);
    for (int y = cells.y0; y < cells.y1; ++y) {
        for (int x = cells.x0; x < cells.x1; ++x) {
            const auto f = features.cell(x, y);
            for (std::size_t c = 0; c < f.size(); ++c) {
                mean[c] += f[c];
            }
        }
    }
    const double n = static_cast<double>(cells.area());
    for (double& v : mean) {
        v /= n;
    }
    return Descriptor::normalize(std::move(mean));
}

std::size_t ClusterResult::size_of(int id) const
{
    return static_cast<std::size_t>(std::count(assignments.begin(), assignments.end(), id));
}

namespace {

double dot(const Descriptor& a, const Descriptor& b)
{
    double s = 0.0;
    const auto va = a.values(), vb = b.values();
    for (std::size_t i = 0; i < va.size(); ++i) {
        s += va[i] * vb[i];
    }
    return s;
}

// Normalised mean of the members of `id`; nullopt when empty or degenerate.
std::optional<Descriptor> centroid_of(std::span<const Descriptor> d, const std::vector<int>& assign, int id)
{
    std::vector<double> sum(d.front().size(), 0.0);
    bool any = false;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (assign[i] != id) {
            continue;
        }
        any = true;
        const auto v = d[i].values();
        for (std::size_t c = 0; c < sum.size(); ++c) {
            sum[c] += v[c];
        }
    }
    if (!any) {
        return std::nullopt;
    }
    try {
        return Descriptor::normalize(std::move(sum));
    } catch (const DegenerateDescriptorError&) {
        return std::nullopt;
    }
}

constexpr int kMaxClusterRounds = 100;

double norm_of(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

std::vector<int> lloyd_rounds(std::span<const Descriptor> d, Descriptor c0, Descriptor c1, int& rounds)
{
    std::vector<int> assign(d.size(), -1);
    for (int round = 0; round < kMaxClusterRounds; ++round) {
        rounds = round + 1;
        std::vector<int> next(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            next[i] = dot(d[i], c0) >= dot(d[i], c1) ? 0 : 1;
        }
        if (next == assign) {
            break;
        }
        assign = std::move(next);
        if (auto c = centroid_of(d, assign, 0)) {
            c0 = std::move(*c);
        }
        if (auto c = centroid_of(d, assign, 1)) {
            c1 = std::move(*c);
        }
    }
    return assign;
}

double objective(std::span<const Descriptor> d, const std::vector<int>& assign)
{
    std::vector<std::vector<double>> sums(2, std::vector<double>(d.front().size(), 0.0));
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto v = d[i].values();
        auto& s = sums[static_cast<std::size_t>(assign[i])];
        for (std::size_t c = 0; c < s.size(); ++c) {
            s[c] += v[c];
        }
    }
    return norm_of(sums[0]) + norm_of(sums[1]);
}

// Single-point moves that raise the sum of cluster-sum norms (the total
// within-cluster cosine to normalised centroids). Lloyd rounds alone stall
// when the farthest-pair seed is an isolated point.
int refine_by_moves(std::span<const Descriptor> d, std::vector<int>& assign)
{
    const std::size_t dim = d.front().size();
    std::vector<std::vector<double>> sums(2, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto v = d[i].values();
        for (std::size_t c = 0; c < dim; ++c) {
            sums[static_cast<std::size_t>(assign[i])][c] += v[c];
        }
    }
    constexpr double kMinGain = 1e-12;
    int moves = 0;
    for (int pass = 0; pass < kMaxClusterRounds; ++pass) {
        bool moved = false;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const auto from = static_cast<std::size_t>(assign[i]);
            const std::size_t to = 1 - from;
            const auto v = d[i].values();
            std::vector<double> a = sums[from], b = sums[to];
            for (std::size_t c = 0; c < dim; ++c) {
                a[c] -= v[c];
                b[c] += v[c];
            }
            const double gain = norm_of(a) + norm_of(b) - norm_of(sums[from]) - norm_of(sums[to]);
            if (gain > kMinGain) {
                sums[from] = std::move(a);
                sums[to] = std::move(b);
                assign[i] = static_cast<int>(to);
                moved = true;
                ++moves;
            }
        }
        if (!moved) {
            break;
        }
    }
    return moves;
}

} // namespace

ClusterResult cluster_two(std::span<const Descriptor> descriptors)
{
    if (descriptors.empty()) {
        throw EmptyInputError("cluster_two needs at least one descriptor");
    }
    const std::size_t n = descriptors.size();
    ClusterResult out;
    out.assignments.assign(n, 0);

    if (n == 1) {
        out.centroid_major = descriptors.front();
        return out;
    }

    // Farthest pair first; then each descriptor paired with its farthest
    // partner. The best objective wins, earlier starts on ties.
    std::vector<std::pair<std::size_t, std::size_t>> starts;
    {
        std::size_t si = 0, sj = 1;
        double least = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double c = dot(descriptors[i], descriptors[j]);
                if (c < least) {
                    least = c;
                    si = i;
                    sj = j;
                }
            }
        }
        starts.emplace_back(si, sj);
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t far = i == 0 ? 1 : 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i && dot(descriptors[i], descriptors[j]) < dot(descriptors[i], descriptors[far])) {
                far = j;
            }
        }
        const std::pair<std::size_t, std::size_t> start{std::min(i, far), std::max(i, far)};
        if (std::find(starts.begin(), starts.end(), start) == starts.end()) {
            starts.push_back(start);
        }
    }

    std::vector<int> assign;
    double best = -1.0;
    for (const auto& [si, sj] : starts) {
        int rounds = 0;
        auto candidate = lloyd_rounds(descriptors, descriptors[si], descriptors[sj], rounds);
        refine_by_moves(descriptors, candidate);
        const double obj = objective(descriptors, candidate);
        if (obj > best + 1e-12) {
            best = obj;
            assign = std::move(candidate);
            out.iterations = rounds;
        }
    }
    out.assignments = assign;

    const std::size_t size0 = out.size_of(0);
    const std::size_t size1 = n - size0;
    if (size0 > size1) {
        out.majority_id = 0;
    } else if (size1 > size0) {
        out.majority_id = 1;
    } else {
        out.majority_id = out.assignments.front();
    }
    const int minority = 1 - out.majority_id;
    out.centroid_major = *centroid_of(descriptors, out.assignments, out.majority_id);
    if (out.size_of(minority) > 0) {
        out.centroid_minor = centroid_of(descriptors, out.assignments, minority);
    }
    return out;
}

std::optional<FresOutcome> fres_select(std::span<const CandidateBox> candidates, const FeatureMap& features,
                                       const ImageRef& image)
{
    std::vector<CandidateBox> kept;
    std::vector<Descriptor> descs;
    for (const auto& c : candidates) {
        try {
            descs.push_back(pool_descriptor(features, c.box, image));
            kept.push_back(c);
        } catch (const DegenerateDescriptorError&) {
            continue;
        }
    }
    if (descs.empty()) {
        return std::nullopt;
    }

    FresOutcome out;
    out.clusters = cluster_two(descs);
    for (std::size_t i = 0; i < descs.size(); ++i) {
        if (out.clusters.assignments[i] == out.clusters.majority_id) {
            out.ranked.push_back({kept[i], cosine(descs[i], out.clusters.centroid_major)});
        }
    }
    std::stable_sort(out.ranked.begin(), out.ranked.end(),
                     [](const FresScore& a, const FresScore& b) { return a.similarity > b.similarity; });
    out.exemplar = Exemplar{out.ranked.front().candidate.box, Stage::FCE, out.ranked.front().similarity};
    return out;
}

FceOutcome fce_stage(const ImageRef& image, const BBox& anchor, std::span<const Detection> detections,
                     const PerceptionBackend& backend, const FeatureMap& features, const PipelineConfig& cfg)
{
    FceOutcome out;
    const BBox anchors[] = {anchor};
    const ScalarMap density = backend.count_density(image, anchors);
    const auto prompts = p2p_prompts(density, detections, cfg);
    const auto candidates = prompts_to_candidates(image, prompts, density, backend);
    const auto single = filter_single_instance(candidates, cfg);
    out.candidate_count = candidates.size();
    out.single_count = single.size();
    if (!single.empty()) {
        out.selection = fres_select(single, features, image);
    }
    return out;
}

} // namespace zes
