#include "zes/scene.hpp"

#include "zes/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <fmt/format.h>

namespace zes {

double SceneObject::distance2(double x, double y) const
{
    const double dx = x - cx, dy = y - cy;
    const double c = std::cos(rotation), s = std::sin(rotation);
    const double u = (dx * c + dy * s) / semi_a;
    const double v = (-dx * s + dy * c) / semi_b;
    return u * u + v * v;
}

BBox SceneObject::raster_box() const
{
    const int r = static_cast<int>(std::ceil(std::max(semi_a, semi_b))) + 1;
    const int icx = static_cast<int>(std::lround(cx)), icy = static_cast<int>(std::lround(cy));
    int x0 = icx + r + 1, y0 = icy + r + 1, x1 = icx - r - 1, y1 = icy - r - 1;
    for (int y = icy - r; y <= icy + r; ++y) {
        for (int x = icx - r; x <= icx + r; ++x) {
            if (covers(x, y)) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
        }
    }
    return BBox{x0, y0, x1 + 1, y1 + 1};
}

std::size_t Scene::count_of(int class_id) const
{
    return static_cast<std::size_t>(
        std::count_if(objects.begin(), objects.end(), [&](const SceneObject& o) { return o.class_id == class_id; }));
}

std::string class_prompt_text(int class_id) { return fmt::format("class_{}", class_id); }

int class_from_prompt(std::string_view text)
{
    if (text.starts_with("class_")) {
        text.remove_prefix(6);
    }
    int id = -1;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), id);
    if (ec != std::errc{} || ptr != text.data() + text.size() || id < 0) {
        return -1;
    }
    return id;
}

namespace {

long long overlap_pixels(const SceneObject& a, const SceneObject& b)
{
    const BBox ba = a.raster_box(), bb = b.raster_box();
    const int x0 = std::max(ba.x0, bb.x0), x1 = std::min(ba.x1, bb.x1);
    const int y0 = std::max(ba.y0, bb.y0), y1 = std::min(ba.y1, bb.y1);
    long long n = 0;
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            n += (a.covers(x, y) && b.covers(x, y)) ? 1 : 0;
        }
    }
    return n;
}

long long raster_area(const SceneObject& o)
{
    const BBox b = o.raster_box();
    long long n = 0;
    for (int y = b.y0; y < b.y1; ++y) {
        for (int x = b.x0; x < b.x1; ++x) {
            n += o.covers(x, y) ? 1 : 0;
        }
    }
    return n;
}

bool compatible_placement(const SceneObject& cand, const std::vector<SceneObject>& placed, double max_overlap)
{
    const BBox cb = cand.raster_box();
    const Point cc{static_cast<int>(cand.cx), static_cast<int>(cand.cy)};
    const long long ca = raster_area(cand);
    for (const auto& o : placed) {
        const BBox ob = o.raster_box();
        if (ob.contains(cc) || cb.contains(Point{static_cast<int>(o.cx), static_cast<int>(o.cy)})) {
            return false;
        }
        const long long ov = overlap_pixels(cand, o);
        if (ov > 0 && static_cast<double>(ov) > max_overlap * static_cast<double>(std::min(ca, raster_area(o)))) {
            return false;
        }
    }
    return true;
}

} // namespace

Scene generate_scene(const SceneParams& params, std::uint64_t seed)
{
    if (params.n_objects < 0 || params.n_distractors < 0 || params.n_objects + params.n_distractors < 1) {
        throw ConfigError("a scene needs at least one object");
    }
    if (!(params.semi_axis_min >= 2.0) || params.semi_axis_max < params.semi_axis_min) {
        throw ConfigError("semi-axes must be >= 2 px and min <= max");
    }
    if (!(params.merge_rate >= 0.0 && params.merge_rate <= 1.0)) {
        throw ConfigError("merge_rate must lie in [0,1]");
    }

    const int total = params.n_objects + params.n_distractors;
    Scene scene;
    scene.seed = seed;
    scene.merge_rate = params.merge_rate;
    scene.similarity_noise = params.similarity_noise;
    scene.density_kernel = params.density_kernel;
    scene.feature_noise = params.feature_noise;
    if (params.width > 0 && params.height > 0) {
        scene.width = params.width;
        scene.height = params.height;
    } else {
        const double mean_axis = 0.5 * (params.semi_axis_min + params.semi_axis_max);
        const double area = total * std::numbers::pi * mean_axis * mean_axis / params.fill_fraction;
        const int side = std::max(48, static_cast<int>(std::ceil(std::sqrt(area))));
        scene.width = side;
        scene.height = side;
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> axis(params.semi_axis_min, params.semi_axis_max);
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);

    int attempts = 0;
    while (static_cast<int>(scene.objects.size()) < total) {
        if (++attempts > params.max_attempts) {
            throw PlacementError(fmt::format("placed {} of {} objects after {} attempts", scene.objects.size(), total,
                                             params.max_attempts));
        }
        SceneObject o;
        o.semi_a = axis(rng);
        o.semi_b = axis(rng);
        o.rotation = angle(rng);
        o.class_id = static_cast<int>(scene.objects.size()) < params.n_objects ? kTargetClass : kDistractorClass;
        const int margin = static_cast<int>(std::ceil(std::max(o.semi_a, o.semi_b))) + 1;
        if (scene.width - 2 * margin < 1 || scene.height - 2 * margin < 1) {
            throw PlacementError("image too small for the requested object size");
        }
        std::uniform_int_distribution<int> px(margin, scene.width - 1 - margin);
        std::uniform_int_distribution<int> py(margin, scene.height - 1 - margin);
        o.cx = px(rng);
        o.cy = py(rng);
        if (compatible_placement(o, scene.objects, params.max_overlap)) {
            scene.objects.push_back(o);
        }
    }
    return scene;
}

GroundTruth render_ground_truth(const Scene& scene, int target_class)
{
    GroundTruth gt;
    const int w = scene.width, h = scene.height;
    gt.labels.assign(static_cast<std::size_t>(w) * h, -1);
    gt.density = ScalarMap(w, h);
    gt.similarity = ScalarMap(w, h);

    std::vector<double> best_d2(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const auto& o = scene.objects[i];
        const BBox b = o.raster_box();
        gt.boxes.push_back(b);
        gt.class_ids.push_back(o.class_id);
        for (int y = std::max(0, b.y0); y < std::min(h, b.y1); ++y) {
            for (int x = std::max(0, b.x0); x < std::min(w, b.x1); ++x) {
                if (!o.covers(x, y)) {
                    continue;
                }
                // Overlaps go to the nearer centre, lower index on ties.
                const double d2 = (x - o.cx) * (x - o.cx) + (y - o.cy) * (y - o.cy);
                const auto idx = static_cast<std::size_t>(y) * w + x;
                if (d2 < best_d2[idx]) {
                    best_d2[idx] = d2;
                    gt.labels[idx] = static_cast<std::int32_t>(i);
                }
            }
        }
        if (o.class_id != target_class) {
            continue;
        }
        ++gt.count;

        const int r = static_cast<int>(std::ceil(4.0 * scene.density_kernel));
        const int icx = static_cast<int>(std::lround(o.cx)), icy = static_cast<int>(std::lround(o.cy));
        double total = 0.0;
        std::vector<std::pair<std::size_t, double>> kernel;
        for (int y = std::max(0, icy - r); y <= std::min(h - 1, icy + r); ++y) {
            for (int x = std::max(0, icx - r); x <= std::min(w - 1, icx + r); ++x) {
                const double d2 = (x - o.cx) * (x - o.cx) + (y - o.cy) * (y - o.cy);
                const double v = std::exp(-0.5 * d2 / (scene.density_kernel * scene.density_kernel));
                kernel.emplace_back(static_cast<std::size_t>(y) * w + x, v);
                total += v;
            }
        }
        auto dv = gt.density.values();
        for (const auto& [idx, v] : kernel) {
            dv[idx] += v / total;
        }

        const int sr = static_cast<int>(std::ceil(4.0 * std::max(o.semi_a, o.semi_b)));
        for (int y = std::max(0, icy - sr); y <= std::min(h - 1, icy + sr); ++y) {
            for (int x = std::max(0, icx - sr); x <= std::min(w - 1, icx + sr); ++x) {
                const double s = std::exp(-0.5 * o.distance2(x, y));
                gt.similarity(x, y) = std::max(gt.similarity(x, y), s);
            }
        }
    }
    return gt;
}

std::vector<Scene> generate_suite(const SuiteSpec& spec, const SceneParams& base)
{
    if (spec.n_scenes < 1 || spec.merge_rates.empty() || spec.objects_min < 1 || spec.objects_max < spec.objects_min) {
        throw ConfigError("invalid suite specification");
    }
    std::vector<Scene> suite;
    suite.reserve(static_cast<std::size_t>(spec.n_scenes));
    for (int i = 0; i < spec.n_scenes; ++i) {
        const std::uint64_t seed = spec.base_seed + static_cast<std::uint64_t>(i);
        std::mt19937_64 count_rng(seed ^ 0x9e3779b97f4a7c15ULL);
        std::uniform_int_distribution<int> count(spec.objects_min, spec.objects_max);
        SceneParams p = base;
        p.n_objects = count(count_rng);
        p.n_distractors = spec.n_distractors;
        p.merge_rate = spec.merge_rates[static_cast<std::size_t>(i) % spec.merge_rates.size()];
        suite.push_back(generate_scene(p, seed));
    }
    return suite;
}

} // namespace zes
