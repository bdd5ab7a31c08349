#include "zes/synthetic_backend.hpp"

#include "zes/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <fmt/format.h>

namespace zes {

namespace {

// Salts keep the noise streams of different capabilities independent.
constexpr std::uint64_t kSimilaritySalt = 0x5349'4d49'4c41'5249ULL;
constexpr std::uint64_t kDetectSalt = 0x4445'5445'4354'0000ULL;
constexpr std::uint64_t kFeatureSalt = 0x4645'4154'5552'4500ULL;
constexpr std::uint64_t kClassSalt = 0x434c'4153'5300'0000ULL;

double radius_along(const SceneObject& o, double ux, double uy)
{
    const double c = std::cos(o.rotation), s = std::sin(o.rotation);
    const double p = (ux * c + uy * s) / o.semi_a;
    const double q = (-ux * s + uy * c) / o.semi_b;
    return 1.0 / std::sqrt(p * p + q * q);
}

// Distance between the two ellipse outlines along the centre line; negative
// when they overlap.
double boundary_gap(const SceneObject& a, const SceneObject& b)
{
    const double dx = b.cx - a.cx, dy = b.cy - a.cy;
    const double d = std::hypot(dx, dy);
    if (d == 0.0) {
        return -std::max(a.semi_a, a.semi_b);
    }
    return d - radius_along(a, dx / d, dy / d) - radius_along(b, -dx / d, -dy / d);
}

} // namespace

SyntheticBackend::SyntheticBackend(Scene scene) : scene_(std::move(scene))
{
    if (scene_.width < 1 || scene_.height < 1 || scene_.objects.empty()) {
        throw ConfigError("synthetic scene needs a positive size and at least one object");
    }
    truth_ = render_ground_truth(scene_, kTargetClass);

    const int w = scene_.width, h = scene_.height;
    background_mask_ = Mask(w, h);
    for (std::size_t i = 0; i < scene_.objects.size(); ++i) {
        Mask m(w, h);
        const BBox b = truth_.boxes[i];
        for (int y = std::max(0, b.y0); y < std::min(h, b.y1); ++y) {
            for (int x = std::max(0, b.x0); x < std::min(w, b.x1); ++x) {
                if (scene_.objects[i].covers(x, y)) {
                    m.set(x, y);
                }
            }
        }
        object_masks_.push_back(std::move(m));
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (truth_.labels[static_cast<std::size_t>(y) * w + x] < 0) {
                background_mask_.set(x, y);
            }
        }
    }

    std::set<int> classes{scene_.background_class_id};
    for (const auto& o : scene_.objects) {
        classes.insert(o.class_id);
    }
    for (int cls : classes) {
        std::mt19937_64 rng(scene_.seed ^ kClassSalt ^ (static_cast<std::uint64_t>(cls) * 0x100000001b3ULL));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (;;) {
            std::vector<double> v(kFeatureChannels);
            double sq = 0.0;
            for (double& x : v) {
                x = normal(rng);
                sq += x * x;
            }
            for (double& x : v) {
                x /= std::sqrt(sq);
            }
            const bool separated = std::all_of(class_vectors_.begin(), class_vectors_.end(), [&](const auto& kv) {
                double dot = 0.0;
                for (int c = 0; c < kFeatureChannels; ++c) {
                    dot += v[c] * kv.second[c];
                }
                return std::abs(dot) < 0.25;
            });
            if (separated) {
                class_vectors_.emplace(cls, std::move(v));
                break;
            }
        }
    }
}

BackendCapabilities SyntheticBackend::capabilities() const
{
    return BackendCapabilities{true, true, true, true, true, kFeatureChannels, true};
}

ImageRef SyntheticBackend::image() const
{
    return ImageRef::make(fmt::format("scene-{}", scene_.seed), scene_.width, scene_.height);
}

void SyntheticBackend::check_image(const ImageRef& image) const
{
    if (image.width != scene_.width || image.height != scene_.height) {
        throw BackendError(fmt::format("image '{}' ({}x{}) does not match the synthetic scene ({}x{})", image.id,
                                       image.width, image.height, scene_.width, scene_.height));
    }
}

int SyntheticBackend::pixel_class(int x, int y) const
{
    const int label = truth_.labels[static_cast<std::size_t>(y) * scene_.width + x];
    return label < 0 ? scene_.background_class_id : scene_.objects[static_cast<std::size_t>(label)].class_id;
}

const std::vector<double>& SyntheticBackend::class_vector(int class_id) const
{
    const auto it = class_vectors_.find(class_id);
    if (it == class_vectors_.end()) {
        throw BackendError(fmt::format("class {} is not part of the scene", class_id));
    }
    return it->second;
}

int SyntheticBackend::majority_class(const BBox& box) const
{
    std::map<int, long long> counts;
    for (int y = box.y0; y < box.y1; ++y) {
        for (int x = box.x0; x < box.x1; ++x) {
            ++counts[pixel_class(x, y)];
        }
    }
    int best = scene_.background_class_id;
    long long best_n = -1;
    for (const auto& [cls, n] : counts) {
        if (n > best_n) {
            best_n = n;
            best = cls;
        }
    }
    return best;
}

double SyntheticBackend::compatibility(std::size_t object, const BBox& exemplar) const
{
    return mass_for(object, static_cast<double>(exemplar.area()), majority_class(exemplar));
}

double SyntheticBackend::mass_for(std::size_t object, double exemplar_area, int exemplar_class) const
{
    const double oa = static_cast<double>(truth_.boxes.at(object).area());
    const bool size_ok = std::max(exemplar_area, oa) <= kAreaFactor * std::min(exemplar_area, oa);
    const bool class_ok = exemplar_class == scene_.objects[object].class_id;
    return size_ok && class_ok ? kCompatibleMass : kIncompatibleMass;
}

ScalarMap SyntheticBackend::text_similarity(const ImageRef& image, const ClassPrompt& prompt) const
{
    check_image(image);
    const int cls = class_from_prompt(prompt.text);
    const int w = scene_.width, h = scene_.height;
    ScalarMap sim(w, h);
    if (cls == kTargetClass) {
        sim = truth_.similarity;
    } else if (cls >= 0) {
        for (const auto& o : scene_.objects) {
            if (o.class_id != cls) {
                continue;
            }
            const int r = static_cast<int>(std::ceil(4.0 * std::max(o.semi_a, o.semi_b)));
            const int icx = static_cast<int>(std::lround(o.cx)), icy = static_cast<int>(std::lround(o.cy));
            for (int y = std::max(0, icy - r); y <= std::min(h - 1, icy + r); ++y) {
                for (int x = std::max(0, icx - r); x <= std::min(w - 1, icx + r); ++x) {
                    sim(x, y) = std::max(sim(x, y), std::exp(-0.5 * o.distance2(x, y)));
                }
            }
        }
    }
    if (scene_.similarity_noise > 0.0) {
        std::mt19937_64 rng(scene_.seed ^ kSimilaritySalt ^ static_cast<std::uint64_t>(cls + 1));
        std::normal_distribution<double> noise(0.0, scene_.similarity_noise);
        for (double& v : sim.values()) {
            v = std::clamp(v + noise(rng), 0.0, 1.0);
        }
    }
    return sim;
}

std::vector<Detection> SyntheticBackend::detect(const ImageRef& image, const ClassPrompt& prompt,
                                                double threshold) const
{
    check_image(image);
    const int cls = class_from_prompt(prompt.text);
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < scene_.objects.size(); ++i) {
        if (scene_.objects[i].class_id == cls) {
            members.push_back(i);
        }
    }

    // Greedy pairing by ascending outline gap; each object merges at most once.
    std::vector<int> partner(scene_.objects.size(), -1);
    if (scene_.merge_rate > 0.0) {
        struct Pair {
            double gap;
            std::size_t a, b;
        };
        std::vector<Pair> pairs;
        for (std::size_t i = 0; i < members.size(); ++i) {
            for (std::size_t j = i + 1; j < members.size(); ++j) {
                const auto& oa = scene_.objects[members[i]];
                const auto& ob = scene_.objects[members[j]];
                const double mean_axis = 0.25 * (oa.semi_a + oa.semi_b + ob.semi_a + ob.semi_b);
                const double gap = boundary_gap(oa, ob);
                if (gap < 2.0 * scene_.merge_rate * mean_axis) {
                    pairs.push_back({gap, members[i], members[j]});
                }
            }
        }
        std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.gap < y.gap; });
        for (const auto& p : pairs) {
            if (partner[p.a] < 0 && partner[p.b] < 0) {
                partner[p.a] = static_cast<int>(p.b);
                partner[p.b] = static_cast<int>(p.a);
            }
        }
    }

    std::mt19937_64 rng(scene_.seed ^ kDetectSalt ^ static_cast<std::uint64_t>(cls + 1));
    std::normal_distribution<double> jitter(0.0, kConfidenceJitter);
    std::vector<Detection> out;
    for (std::size_t i : members) {
        const int p = partner[i];
        if (p >= 0 && static_cast<std::size_t>(p) < i) {
            continue; // emitted with its partner
        }
        const bool merged = p >= 0;
        const BBox box = merged ? union_box(truth_.boxes[i], truth_.boxes[static_cast<std::size_t>(p)]) : truth_.boxes[i];
        const double base = merged ? kMergedConfidence : kSingleConfidence;
        const double conf = base - std::abs(jitter(rng));
        if (base < threshold) {
            continue;
        }
        out.push_back(Detection{box, std::max(conf, threshold)});
    }
    return out;
}

std::optional<Mask> SyntheticBackend::segment_point(const ImageRef& image, Point point) const
{
    check_image(image);
    if (point.x < 0 || point.y < 0 || point.x >= scene_.width || point.y >= scene_.height) {
        throw BoundsError(fmt::format("prompt point ({},{}) outside the image", point.x, point.y));
    }
    const int label = truth_.labels[static_cast<std::size_t>(point.y) * scene_.width + point.x];
    if (label >= 0) {
        return object_masks_[static_cast<std::size_t>(label)];
    }
    if (background_mask_.empty()) {
        return std::nullopt;
    }
    return background_mask_;
}

FeatureMap SyntheticBackend::feature_map(const ImageRef& image) const
{
    check_image(image);
    const int w = scene_.width, h = scene_.height;
    const int gw = (w + kFeatureStride - 1) / kFeatureStride;
    const int gh = (h + kFeatureStride - 1) / kFeatureStride;
    const int C = kFeatureChannels;

    std::mt19937_64 rng(scene_.seed ^ kFeatureSalt);
    std::normal_distribution<double> noise(0.0, scene_.feature_noise > 0.0 ? scene_.feature_noise : 1.0);
    std::vector<double> base(static_cast<std::size_t>(gw) * gh * C);
    for (int gy = 0; gy < gh; ++gy) {
        for (int gx = 0; gx < gw; ++gx) {
            std::map<int, int> counts;
            for (int y = gy * kFeatureStride; y < std::min(h, (gy + 1) * kFeatureStride); ++y) {
                for (int x = gx * kFeatureStride; x < std::min(w, (gx + 1) * kFeatureStride); ++x) {
                    ++counts[pixel_class(x, y)];
                }
            }
            int dominant = scene_.background_class_id, best = -1;
            for (const auto& [cls, n] : counts) {
                if (n > best) {
                    best = n;
                    dominant = cls;
                }
            }
            const auto& cv = class_vector(dominant);
            double* cell = base.data() + (static_cast<std::size_t>(gy) * gw + gx) * C;
            double sq = 0.0;
            for (int c = 0; c < C; ++c) {
                cell[c] = cv[c] + (scene_.feature_noise > 0.0 ? noise(rng) : 0.0);
                sq += cell[c] * cell[c];
            }
            const double n = std::sqrt(sq);
            for (int c = 0; c < C; ++c) {
                cell[c] /= n;
            }
        }
    }

    // Bilinear upsampling stands in for a learned feature upsampler.
    const int uw = gw * kUpsampleFactor, uh = gh * kUpsampleFactor;
    FeatureMap out(C, uw, uh);
    out.set_base_grid(gw, gh);
    for (int y = 0; y < uh; ++y) {
        const double sy = std::clamp((y + 0.5) / kUpsampleFactor - 0.5, 0.0, static_cast<double>(gh - 1));
        const int y0 = static_cast<int>(std::floor(sy));
        const int y1 = std::min(y0 + 1, gh - 1);
        const double fy = sy - y0;
        for (int x = 0; x < uw; ++x) {
            const double sx = std::clamp((x + 0.5) / kUpsampleFactor - 0.5, 0.0, static_cast<double>(gw - 1));
            const int x0 = static_cast<int>(std::floor(sx));
            const int x1 = std::min(x0 + 1, gw - 1);
            const double fx = sx - x0;
            const double* a = base.data() + (static_cast<std::size_t>(y0) * gw + x0) * C;
            const double* b = base.data() + (static_cast<std::size_t>(y0) * gw + x1) * C;
            const double* c = base.data() + (static_cast<std::size_t>(y1) * gw + x0) * C;
            const double* d = base.data() + (static_cast<std::size_t>(y1) * gw + x1) * C;
            const double wa = (1 - fx) * (1 - fy), wb = fx * (1 - fy), wc = (1 - fx) * fy, wd = fx * fy;
            auto dst = out.cell(x, y);
            for (int k = 0; k < C; ++k) {
                dst[static_cast<std::size_t>(k)] = static_cast<float>(wa * a[k] + wb * b[k] + wc * c[k] + wd * d[k]);
            }
        }
    }
    return out;
}

ScalarMap SyntheticBackend::count_density(const ImageRef& image, std::span<const BBox> exemplars) const
{
    check_image(image);
    if (exemplars.empty()) {
        throw ContractError("the counter requires at least one exemplar");
    }
    std::vector<int> exemplar_classes;
    for (const auto& e : exemplars) {
        require_in_bounds(e, scene_.width, scene_.height);
        exemplar_classes.push_back(majority_class(e));
    }
    const int w = scene_.width, h = scene_.height;
    ScalarMap density(w, h);
    auto dv = density.values();
    const double sigma = scene_.density_kernel;
    const int r = static_cast<int>(std::ceil(4.0 * sigma));
    for (std::size_t i = 0; i < scene_.objects.size(); ++i) {
        double mass = 0.0;
        for (std::size_t k = 0; k < exemplars.size(); ++k) {
            mass += mass_for(i, static_cast<double>(exemplars[k].area()), exemplar_classes[k]);
        }
        mass /= static_cast<double>(exemplars.size());

        const auto& o = scene_.objects[i];
        const int icx = static_cast<int>(std::lround(o.cx)), icy = static_cast<int>(std::lround(o.cy));
        std::vector<std::pair<std::size_t, double>> kernel;
        double total = 0.0;
        for (int y = std::max(0, icy - r); y <= std::min(h - 1, icy + r); ++y) {
            for (int x = std::max(0, icx - r); x <= std::min(w - 1, icx + r); ++x) {
                const double d2 = (x - o.cx) * (x - o.cx) + (y - o.cy) * (y - o.cy);
                const double v = std::exp(-0.5 * d2 / (sigma * sigma));
                kernel.emplace_back(static_cast<std::size_t>(y) * w + x, v);
                total += v;
            }
        }
        for (const auto& [idx, v] : kernel) {
            dv[idx] += mass * v / total;
        }
    }
    return density;
}

} // namespace zes
