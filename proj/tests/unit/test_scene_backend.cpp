#include "zes/errors.hpp"
#include "zes/fce.hpp"
#include "zes/map_analytics.hpp"
#include "zes/synthetic_backend.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace zes;
using zes::testing::circle;
using zes::testing::manual_scene;

namespace {

double total(const ScalarMap& m)
{
    double s = 0.0;
    for (double v : m.values()) s += v;
    return s;
}

const ClassPrompt kPrompt = ClassPrompt::make("class_0");

} // namespace

TEST_CASE("text similarity values")
{
    const SyntheticBackend backend(manual_scene(64, 40, {circle(16, 20, 6), circle(44, 20, 5, kDistractorClass)}));
    const auto image = backend.image();
    const auto sim = backend.text_similarity(image, kPrompt);
    CHECK(sim(16, 20) == 1.0);
    CHECK(sim(62, 2) < 1e-6);
    CHECK(sim(44, 20) < 1e-6);
    CHECK(sim(22, 20) == doctest::Approx(std::exp(-0.5)));

    const auto other = backend.text_similarity(image, ClassPrompt::make("class_1"));
    CHECK(other(44, 20) == 1.0);
    CHECK(other(16, 20) < 1e-6);

    for (const char* unknown : {"class_7", "zebra"}) {
        const auto none = backend.text_similarity(image, ClassPrompt::make(unknown));
        CHECK(*std::max_element(none.values().begin(), none.values().end()) == 0.0);
    }
}

TEST_CASE("noisy similarity still separates objects from background")
{
    for (const double noise : {0.05, 0.1}) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            SceneParams params;
            params.n_objects = 10;
            params.similarity_noise = noise;
            const SyntheticBackend backend(generate_scene(params, seed));
            const auto sim = backend.text_similarity(backend.image(), kPrompt);
            const auto& labels = backend.ground_truth().labels;
            double in = 0.0, out = 0.0;
            std::size_t n_in = 0, n_out = 0;
            for (std::size_t i = 0; i < labels.size(); ++i) {
                CHECK((sim.values()[i] >= 0.0 && sim.values()[i] <= 1.0));
                if (labels[i] >= 0) {
                    in += sim.values()[i];
                    ++n_in;
                } else {
                    out += sim.values()[i];
                    ++n_out;
                }
            }
            CHECK(in / n_in - out / n_out > 0.5);
        }
    }
}

TEST_CASE("detections without merging are the ground-truth boxes")
{
    SceneParams params;
    params.n_objects = 15;
    const SyntheticBackend backend(generate_scene(params, 3));
    const auto& truth = backend.ground_truth();
    const auto dets = backend.detect(backend.image(), kPrompt, 0.15);
    REQUIRE(dets.size() == truth.boxes.size());
    for (std::size_t i = 0; i < dets.size(); ++i) {
        CHECK(dets[i].box == truth.boxes[i]);
        CHECK(dets[i].confidence <= SyntheticBackend::kSingleConfidence);
        CHECK(dets[i].confidence >= 0.15);
    }
    CHECK(backend.detect(backend.image(), kPrompt, 1.0).empty());
    CHECK(backend.detect(backend.image(), ClassPrompt::make("class_1"), 0.15).empty());
}

TEST_CASE("adjacent objects merge at merge_rate 1")
{
    const SyntheticBackend backend(manual_scene(64, 40, {circle(20, 20, 6), circle(34, 21, 6), circle(56, 8, 4)}, 1.0));
    const auto& truth = backend.ground_truth();
    const auto dets = backend.detect(backend.image(), kPrompt, 0.15);
    REQUIRE(dets.size() == 2);
    CHECK(dets[0].box == union_box(truth.boxes[0], truth.boxes[1]));
    CHECK(dets[0].confidence <= SyntheticBackend::kMergedConfidence);
    CHECK(dets[1].box == truth.boxes[2]);

    // a threshold above the merged base confidence drops only the merged box
    const auto strict = backend.detect(backend.image(), kPrompt, 0.8);
    REQUIRE(strict.size() == 1);
    CHECK(strict[0].box == truth.boxes[2]);
    CHECK(strict[0].confidence >= 0.8);
}

TEST_CASE("point segmentation")
{
    const SyntheticBackend backend(manual_scene(64, 40, {circle(20, 20, 8), circle(32, 20, 6), circle(52, 10, 5.5)}));
    const auto image = backend.image();
    const auto& truth = backend.ground_truth();

    const auto m = backend.segment_point(image, {52, 10});
    REQUIRE(m);
    const double area = std::numbers::pi * 5.5 * 5.5;
    CHECK(std::abs(static_cast<double>(m->count()) - area) < 2.0 * std::numbers::pi * 5.5);
    CHECK(mask_to_bbox(*m) == truth.boxes[2]);

    const auto bg = backend.segment_point(image, {2, 38});
    REQUIRE(bg);
    CHECK_FALSE(bg->contains(20, 20));
    CHECK(bg->contains(63, 0));
    CHECK(bg->count() + m->count() < 64 * 40);

    // (27, 20) lies in both discs; the second centre is nearer
    REQUIRE(SceneObject(circle(20, 20, 8)).covers(27, 20));
    REQUIRE(SceneObject(circle(32, 20, 6)).covers(27, 20));
    const auto overlap = backend.segment_point(image, {27, 20});
    REQUIRE(overlap);
    CHECK(overlap->contains(32, 20));
    CHECK_FALSE(overlap->contains(20, 20));
    // (26, 20) is equidistant: the lower index wins
    const auto tie = backend.segment_point(image, {26, 20});
    REQUIRE(tie);
    CHECK(tie->contains(20, 20));

    CHECK_THROWS_AS(backend.segment_point(image, {64, 0}), BoundsError);
    CHECK_THROWS_AS(backend.segment_point(ImageRef::make("x", 10, 10), {1, 1}), BackendError);
}

TEST_CASE("feature map class structure")
{
    // centres 16 px apart keep both discs on the same cell phase
    const SyntheticBackend backend(manual_scene(
        96, 48, {circle(16, 16, 7), circle(48, 16, 7), circle(16, 36, 6, kDistractorClass)}));
    const auto image = backend.image();
    const auto f = backend.feature_map(image);
    CHECK(f.base_width() == 24);
    CHECK(f.base_height() == 12);
    const auto& truth = backend.ground_truth();
    const auto a = pool_descriptor(f, truth.boxes[0], image);
    const auto b = pool_descriptor(f, truth.boxes[1], image);
    CHECK(cosine(a, b) == doctest::Approx(1.0).epsilon(1e-6));

    double class_cos = 0.0;
    const auto& va = backend.class_vector(kTargetClass);
    const auto& vd = backend.class_vector(kDistractorClass);
    for (std::size_t i = 0; i < va.size(); ++i) class_cos += va[i] * vd[i];
    CHECK(std::abs(class_cos) < 0.25);
    // interior boxes pool cells of a single class
    const auto ia = pool_descriptor(f, {12, 12, 20, 20}, image);
    const auto id = pool_descriptor(f, {13, 33, 19, 39}, image);
    CHECK(cosine(ia, id) == doctest::Approx(class_cos).epsilon(0.05));

    for (const auto& [w, h] : {std::pair{61, 33}, std::pair{8, 8}}) {
        const SyntheticBackend small(manual_scene(w, h, {circle(w / 2.0, h / 2.0, 3)}));
        const auto g = small.feature_map(small.image());
        CHECK(g.base_width() == (w + 3) / 4);
        CHECK(g.base_height() == (h + 3) / 4);
    }
}

TEST_CASE("class vectors stay separated for every class")
{
    std::vector<SceneObject> objects;
    for (int c = 0; c < 8; ++c) objects.push_back(circle(8 + 14 * c, 10, 4, c));
    const SyntheticBackend backend(manual_scene(120, 20, objects));
    std::vector<int> classes{255};
    for (int c = 0; c < 8; ++c) classes.push_back(c);
    for (std::size_t i = 0; i < classes.size(); ++i)
        for (std::size_t j = i + 1; j < classes.size(); ++j) {
            const auto& u = backend.class_vector(classes[i]);
            const auto& v = backend.class_vector(classes[j]);
            double dot = 0.0;
            for (std::size_t k = 0; k < u.size(); ++k) dot += u[k] * v[k];
            CHECK(std::abs(dot) < 0.25);
        }
    CHECK_THROWS_AS(backend.class_vector(9), BackendError);
}

TEST_CASE("count density against single and merged exemplars")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SceneParams params;
        params.n_objects = 20;
        const SyntheticBackend backend(generate_scene(params, seed));
        const auto image = backend.image();
        const auto& truth = backend.ground_truth();
        const double n = 20.0;
        const BBox single[] = {truth.boxes[0]};
        const auto d = backend.count_density(image, single);
        CHECK(std::abs(total(d) - n) <= 0.05 * n);
        for (double v : d.values()) CHECK(v >= 0.0);
    }

    // equal discs placed so a pair's enclosure is 3x one disc's box
    std::vector<SceneObject> objects;
    for (int i = 0; i < 6; ++i) objects.push_back(circle(12 + 30 * i, 12, 5));
    objects.push_back(circle(12 + 10, 12 + 10, 5));
    const SyntheticBackend backend(manual_scene(190, 40, objects));
    const auto& truth = backend.ground_truth();
    const BBox merged = union_box(truth.boxes[0], truth.boxes[6]);
    REQUIRE(static_cast<double>(merged.area()) / truth.boxes[0].area() > 2.25);
    const BBox merged_ex[] = {merged};
    const auto md = backend.count_density(backend.image(), merged_ex);
    CHECK(total(md) == doctest::Approx(0.25 * 7).epsilon(0.05));

    CHECK_THROWS_AS(backend.count_density(backend.image(), {}), ContractError);
}

TEST_CASE("several exemplars average the per-exemplar masses")
{
    const SyntheticBackend backend(manual_scene(80, 40, {circle(15, 20, 6), circle(40, 20, 6), circle(65, 20, 6)}));
    const auto& truth = backend.ground_truth();
    const BBox good = truth.boxes[0];
    const BBox background{0, 0, 4, 4};
    const BBox both[] = {good, background};
    CHECK(total(backend.count_density(backend.image(), both)) ==
          doctest::Approx(3.0 * 0.5 * (SyntheticBackend::kCompatibleMass + SyntheticBackend::kIncompatibleMass)));
    CHECK(backend.compatibility(1, good) == SyntheticBackend::kCompatibleMass);
    CHECK(backend.compatibility(1, background) == SyntheticBackend::kIncompatibleMass);
}

// Equal discs in diagonal pairs whose enclosing box is 3x a single disc's
// box, with seeded jitter of the pair positions.
Scene constructed_scene(std::uint64_t seed)
{
    constexpr double r = 6.0;
    const double d = 2.0 * r * (std::sqrt(3.0) - 1.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-3.0, 3.0);
    std::vector<SceneObject> objects;
    for (int gy = 0; gy < 3; ++gy)
        for (int gx = 0; gx < 4; ++gx) {
            const double x = 12 + 40 * gx + jitter(rng), y = 12 + 40 * gy + jitter(rng);
            objects.push_back(circle(x, y, r));
            if ((gx + gy + static_cast<int>(seed)) % 2 == 0) objects.push_back(circle(x + d, y + d, r));
        }
    return manual_scene(176, 136, objects, 1.0);
}

TEST_CASE("single-object exemplars dominate merged ones on the constructed suite")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const SyntheticBackend backend(constructed_scene(seed));
        const auto image = backend.image();
        const auto& truth = backend.ground_truth();
        const double n = static_cast<double>(truth.count);
        int merged_seen = 0;
        for (const auto& d : backend.detect(image, kPrompt, 0.15)) {
            if (std::find(truth.boxes.begin(), truth.boxes.end(), d.box) != truth.boxes.end()) continue;
            ++merged_seen;
            const BBox merged[] = {d.box};
            const double merged_err = std::abs(total(backend.count_density(image, merged)) - n);
            for (const auto& b : truth.boxes) {
                const BBox single[] = {b};
                CHECK(std::abs(total(backend.count_density(image, single)) - n) < merged_err);
            }
        }
        CHECK(merged_seen >= 5);
    }
}

TEST_CASE("scene generation")
{
    SceneParams params;
    params.n_objects = 20;
    params.n_distractors = 3;
    const Scene a = generate_scene(params, 11);
    CHECK(a == generate_scene(params, 11));
    CHECK(a != generate_scene(params, 12));
    CHECK(a.objects.size() == 23);
    CHECK(a.count_of(kTargetClass) == 20);
    for (const auto& o : a.objects) {
        CHECK(o.semi_a >= 2.0);
        CHECK(o.semi_b >= 2.0);
        CHECK((o.cx >= 0 && o.cx < a.width && o.cy >= 0 && o.cy < a.height));
    }
    const auto truth = render_ground_truth(a);
    CHECK(truth.count == 20);
    CHECK(std::abs(total(truth.density) - 20.0) <= 1.0);

    SceneParams crowded;
    crowded.n_objects = 400;
    crowded.width = 40;
    crowded.height = 40;
    crowded.max_attempts = 2000;
    CHECK_THROWS_AS(generate_scene(crowded, 1), PlacementError);
}

TEST_CASE("every capability is deterministic")
{
    SceneParams params;
    params.n_objects = 10;
    params.merge_rate = 0.5;
    const Scene scene = generate_scene(params, 5);
    const SyntheticBackend a(scene), b(scene);
    const auto image = a.image();
    CHECK(a.text_similarity(image, kPrompt) == b.text_similarity(image, kPrompt));
    CHECK(a.detect(image, kPrompt, 0.15) == b.detect(image, kPrompt, 0.15));
    CHECK(*a.segment_point(image, {5, 5}) == *b.segment_point(image, {5, 5}));
    CHECK(a.feature_map(image) == b.feature_map(image));
    const BBox ex[] = {a.ground_truth().boxes[0]};
    CHECK(a.count_density(image, ex) == b.count_density(image, ex));
    CHECK(a.capabilities().shareable);
}
