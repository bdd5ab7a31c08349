#pragma once

#include "zes/core_types.hpp"
#include "zes/evaluation.hpp"
#include "zes/pipeline.hpp"
#include "zes/scene.hpp"

#include <string>
#include <vector>

namespace zes {

struct SuiteEntry {
    std::string id;
    Scene scene;
};

// Ids "scene_0000", "scene_0001", ... in suite order.
std::vector<SuiteEntry> label_suite(const std::vector<Scene>& scenes);

struct SceneRun {
    std::string id;
    PipelineResult result;
    double ground_truth = 0.0;
};

/// Runs the pipeline on every scene with the synthetic backend, `jobs`
/// workers, results in suite order.
std::vector<SceneRun> run_suite(const std::vector<SuiteEntry>& suite, const PipelineConfig& cfg, int jobs = 1);

EvalReport evaluate_runs(const std::vector<SceneRun>& runs);

struct AblationRow {
    std::string config;
    ErrorSummary summary;
};

/// Stage ablation over a suite: DAE-only, DAE+DGE, full; three exemplars
/// from a single stage (DAE-top3, DGE-top3, FCE-top3); and the full pipeline
/// with k_peaks in {4, 8, 16}.
std::vector<AblationRow> ablate(const std::vector<SuiteEntry>& suite, const PipelineConfig& cfg, int jobs = 1);

const AblationRow& find_row(const std::vector<AblationRow>& rows, const std::string& config);

} // namespace zes
