#include "zes/benchmark.hpp"

#include "zes/errors.hpp"
#include "zes/synthetic_backend.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

#include <fmt/format.h>

namespace zes {

std::vector<SuiteEntry> label_suite(const std::vector<Scene>& scenes)
{
    std::vector<SuiteEntry> out;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        out.push_back({fmt::format("scene_{:04d}", i), scenes[i]});
    }
    return out;
}

namespace {

// Calls fn(i) for i in [0, n) on `jobs` threads. The first exception is
// rethrown after all workers stop.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn)
{
    const auto workers = static_cast<std::size_t>(std::clamp(jobs, 1, 64));
    if (workers == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                    next = n;
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

ClassPrompt target_prompt() { return ClassPrompt::make(class_prompt_text(kTargetClass)); }

std::vector<BBox> pad_to_three(std::vector<BBox> boxes, const BBox& fallback)
{
    if (boxes.empty()) {
        boxes.push_back(fallback);
    }
    while (boxes.size() < 3) {
        boxes.push_back(boxes.back());
    }
    return boxes;
}

} // namespace

std::vector<SceneRun> run_suite(const std::vector<SuiteEntry>& suite, const PipelineConfig& cfg, int jobs)
{
    cfg.validate();
    std::vector<SceneRun> runs(suite.size());
    parallel_for(suite.size(), jobs, [&](std::size_t i) {
        const SyntheticBackend backend(suite[i].scene);
        const auto image = ImageRef::make(suite[i].id, suite[i].scene.width, suite[i].scene.height);
        runs[i].id = suite[i].id;
        runs[i].result = run_pipeline(image, target_prompt(), backend, cfg);
        runs[i].ground_truth = static_cast<double>(suite[i].scene.count_of(kTargetClass));
    });
    return runs;
}

EvalReport evaluate_runs(const std::vector<SceneRun>& runs)
{
    std::vector<Prediction> preds;
    for (const auto& r : runs) {
        preds.push_back({r.id, r.result.final_count, r.ground_truth});
    }
    return evaluate(preds);
}

std::vector<AblationRow> ablate(const std::vector<SuiteEntry>& suite, const PipelineConfig& cfg, int jobs)
{
    cfg.validate();
    if (suite.empty()) {
        throw EmptyInputError("ablation needs a nonempty suite");
    }
    const std::vector<std::string> names = {"DAE-only", "DAE+DGE",   "DAE+DGE+FCE", "DAE-top3", "DGE-top3",
                                            "FCE-top3", "k=4",       "k=8",         "k=16"};
    const int k_values[] = {4, 8, 16};

    // predictions[config][scene]
    std::vector<std::vector<Prediction>> predictions(names.size(), std::vector<Prediction>(suite.size()));
    parallel_for(suite.size(), jobs, [&](std::size_t i) {
        const auto& entry = suite[i];
        const SyntheticBackend backend(entry.scene);
        const auto image = ImageRef::make(entry.id, entry.scene.width, entry.scene.height);
        const double gt = static_cast<double>(entry.scene.count_of(kTargetClass));
        const auto full = run_pipeline(image, target_prompt(), backend, cfg);

        auto count_of = [&](const std::vector<BBox>& boxes) {
            return boxes.empty() ? 0.0 : count_with(image, backend, boxes);
        };
        std::vector<double> counts(names.size(), 0.0);
        if (!full.empty) {
            const auto boxes = full.exemplar_boxes();
            counts[0] = count_of({boxes[0]});
            counts[1] = count_of({boxes[0], boxes[1]});
            counts[2] = full.final_count;
            counts[3] = count_of(pad_to_three(full.dae_ranked, boxes[0]));
            counts[4] = count_of(pad_to_three(full.dge_ranked, boxes[1]));
            counts[5] = count_of(pad_to_three(full.fce_ranked, boxes[2]));
        }
        for (std::size_t k = 0; k < std::size(k_values); ++k) {
            PipelineConfig kc = cfg;
            kc.k_peaks = k_values[k];
            counts[6 + k] = kc == cfg ? full.final_count : run_pipeline(image, target_prompt(), backend, kc).final_count;
        }
        for (std::size_t c = 0; c < names.size(); ++c) {
            predictions[c][i] = Prediction{entry.id, counts[c], gt};
        }
    });

    std::vector<AblationRow> rows;
    for (std::size_t c = 0; c < names.size(); ++c) {
        rows.push_back({names[c], evaluate(predictions[c]).overall});
    }
    return rows;
}

const AblationRow& find_row(const std::vector<AblationRow>& rows, const std::string& config)
{
    const auto it = std::find_if(rows.begin(), rows.end(), [&](const AblationRow& r) { return r.config == config; });
    if (it == rows.end()) {
        throw ConfigError(fmt::format("no ablation row '{}'", config));
    }
    return *it;
}

} // namespace zes
