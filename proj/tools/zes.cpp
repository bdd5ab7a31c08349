// zes command-line front end: scene generation, single runs, suite
// benchmarks and ablations.

#include "zes/artifacts.hpp"
#include "zes/benchmark.hpp"
#include "zes/errors.hpp"
#include "zes/remote_backend.hpp"
#include "zes/serialization.hpp"
#include "zes/synthetic_backend.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace fs = std::filesystem;
using namespace zes;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kBackend = 3, kIo = 4 };

struct SuiteOptions {
    int n_scenes = 100;
    std::string objects = "5:50";
    std::vector<double> merge_rates{0.0, 0.5, 0.8};
    std::uint64_t seed = 0;
    int distractors = 0;
    std::string suite_dir;
};

void add_suite_options(CLI::App& cmd, SuiteOptions& o)
{
    cmd.add_option("--n-scenes", o.n_scenes, "Number of scenes")->check(CLI::PositiveNumber);
    cmd.add_option("--objects", o.objects, "Target objects per scene: N or MIN:MAX");
    cmd.add_option("--merge-rate", o.merge_rates, "Merge rates, cycled over scenes")->delimiter(',');
    cmd.add_option("--seed", o.seed, "Seed of the first scene (scene i uses seed + i)");
    cmd.add_option("--distractors", o.distractors, "Distractor-class objects per scene")->check(CLI::NonNegativeNumber);
}

SuiteSpec suite_spec(const SuiteOptions& o)
{
    SuiteSpec spec;
    spec.n_scenes = o.n_scenes;
    spec.base_seed = o.seed;
    spec.merge_rates = o.merge_rates;
    spec.n_distractors = o.distractors;
    const auto colon = o.objects.find(':');
    try {
        if (colon == std::string::npos) {
            spec.objects_min = spec.objects_max = std::stoi(o.objects);
        } else {
            spec.objects_min = std::stoi(o.objects.substr(0, colon));
            spec.objects_max = std::stoi(o.objects.substr(colon + 1));
        }
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("--objects expects N or MIN:MAX, got '{}'", o.objects));
    }
    if (spec.objects_min < 1 || spec.objects_max < spec.objects_min) {
        throw ConfigError(fmt::format("bad object range '{}'", o.objects));
    }
    for (const double m : spec.merge_rates) {
        if (!(m >= 0.0 && m <= 1.0)) {
            throw ConfigError("merge rates must lie in [0,1]");
        }
    }
    if (spec.merge_rates.empty()) {
        throw ConfigError("at least one merge rate is needed");
    }
    return spec;
}

std::vector<SuiteEntry> load_suite_dir(const fs::path& dir)
{
    if (!fs::is_directory(dir)) {
        throw IoError(fmt::format("{} is not a directory", dir.string()));
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (e.is_regular_file() && name.starts_with("scene_") && e.path().extension() == ".json") {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw IoError(fmt::format("no scene_*.json files in {}", dir.string()));
    }
    std::vector<SuiteEntry> suite;
    for (const auto& f : files) {
        suite.push_back({f.stem().string(), load_scene(f)});
    }
    return suite;
}

std::vector<SuiteEntry> build_suite(const SuiteOptions& o)
{
    if (!o.suite_dir.empty()) {
        return load_suite_dir(o.suite_dir);
    }
    return label_suite(generate_suite(suite_spec(o)));
}

PipelineConfig config_or_default(const std::string& path)
{
    return path.empty() ? PipelineConfig{} : load_config(path);
}

void write_or_print(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        write_text_file(path, text);
    }
}

int cmd_gen(const SuiteOptions& o, const std::string& out_dir)
{
    const auto scenes = label_suite(generate_suite(suite_spec(o)));
    for (const auto& s : scenes) {
        save_scene_bundle(s.scene, out_dir, s.id);
    }
    fmt::print("wrote {} scenes to {}\n", scenes.size(), out_dir);
    return kOk;
}

struct RunOptions {
    std::string scene;
    std::string image;
    std::string prompt;
    std::string backend = "synthetic";
    std::string config;
    std::string emit;
};

int cmd_run(const RunOptions& o)
{
    if (o.scene.empty() == o.image.empty()) {
        throw ConfigError("run needs exactly one of --scene or --image");
    }
    const auto cfg = config_or_default(o.config);

    std::unique_ptr<PerceptionBackend> backend;
    ImageRef image;
    std::string prompt_text = o.prompt;
    if (!o.scene.empty()) {
        const Scene scene = load_scene(o.scene);
        image = ImageRef::make(fs::path(o.scene).stem().string(), scene.width, scene.height);
        if (prompt_text.empty()) {
            prompt_text = class_prompt_text(kTargetClass);
        }
        if (o.backend == "synthetic") {
            backend = std::make_unique<SyntheticBackend>(scene);
        } else {
            backend = std::make_unique<RemoteBackend>(parse_remote_spec(o.backend));
        }
    } else {
        if (o.backend == "synthetic") {
            throw ConfigError("the synthetic backend needs --scene; use --backend remote:URL for images");
        }
        if (prompt_text.empty()) {
            throw ConfigError("--image needs --prompt");
        }
        const Raster raster = read_ppm(o.image);
        image = ImageRef::make(fs::path(o.image).stem().string(), raster.width(), raster.height());
        std::vector<std::uint8_t> bytes;
        for (const auto& p : raster.pixels()) {
            bytes.insert(bytes.end(), {p.r, p.g, p.b});
        }
        auto remote = std::make_unique<RemoteBackend>(parse_remote_spec(o.backend));
        remote->attach_pixels(image.id, make_array(std::span<const std::uint8_t>(bytes),
                                                   {static_cast<std::size_t>(raster.height()),
                                                    static_cast<std::size_t>(raster.width()), 3}));
        backend = std::move(remote);
    }

    PipelineMaps maps;
    const auto result = run_pipeline(image, ClassPrompt::make(prompt_text), *backend, cfg, &maps);
    if (!o.emit.empty()) {
        emit_artifacts(result, image, maps, o.emit);
    }
    Json doc = result_to_json(result);
    doc["image"] = {{"id", image.id}, {"width", image.width}, {"height", image.height}};
    std::cout << doc.dump(2) << "\n";
    return kOk;
}

int cmd_bench(const SuiteOptions& o, const std::string& config, const std::string& csv, int jobs)
{
    const auto suite = build_suite(o);
    const auto runs = run_suite(suite, config_or_default(config), jobs);
    const auto report = evaluate_runs(runs);
    std::ostringstream out;
    write_metrics_csv(out, report);
    write_or_print(csv, out.str());

    std::ostream& summary = (csv.empty() || csv == "-") ? std::cerr : std::cout;
    summary << format_summary_row("all", report.overall) << "\n"
            << format_summary_row("low", report.low) << "\n"
            << format_summary_row("med", report.med) << "\n"
            << format_summary_row("high", report.high) << "\n";
    return kOk;
}

int cmd_ablate(const SuiteOptions& o, const std::string& config, const std::string& csv, int jobs)
{
    const auto rows = ablate(build_suite(o), config_or_default(config), jobs);
    std::string text = "config,mae,rmse\n";
    for (const auto& r : rows) {
        text += fmt::format("{},{:.6f},{:.6f}\n", r.config, r.summary.mae, r.summary.rmse);
    }
    write_or_print(csv, text);
    if (!csv.empty() && csv != "-") {
        for (const auto& r : rows) {
            std::cout << format_summary_row(r.config, r.summary) << "\n";
        }
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Zero-shot exemplar selection and counting"};
    app.require_subcommand(1);

    SuiteOptions suite;
    std::string out_dir;
    auto* gen = app.add_subcommand("gen", "Generate a scene suite with ground-truth bundles");
    add_suite_options(*gen, suite);
    gen->add_option("--out", out_dir, "Output directory")->required();

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "Run the pipeline on one scene or image");
    run_cmd->add_option("--scene", run.scene, "Scene JSON file");
    run_cmd->add_option("--image", run.image, "Binary PPM image (remote backends)");
    run_cmd->add_option("--prompt", run.prompt, "Class prompt (default class_0 for scenes)");
    run_cmd->add_option("--backend", run.backend, "synthetic or remote:URL");
    run_cmd->add_option("--config", run.config, "Pipeline config JSON");
    run_cmd->add_option("--emit", run.emit, "Directory for overlay, heatmaps and result.json");

    std::string config, csv;
    int jobs = 1;
    auto* bench = app.add_subcommand("bench", "Evaluate a scene suite; metrics CSV plus summary");
    auto* abl = app.add_subcommand("ablate", "Stage and k ablations over a scene suite");
    for (auto* cmd : {bench, abl}) {
        add_suite_options(*cmd, suite);
        cmd->add_option("--suite", suite.suite_dir, "Load scene_*.json from this directory instead of generating");
        cmd->add_option("--config", config, "Pipeline config JSON");
        cmd->add_option("--csv", csv, "CSV output path (default stdout)");
        cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1, 64));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (*gen) return cmd_gen(suite, out_dir);
        if (*run_cmd) return cmd_run(run);
        if (*bench) return cmd_bench(suite, config, csv, jobs);
        if (*abl) return cmd_ablate(suite, config, csv, jobs);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const PlacementError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kBackend;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
