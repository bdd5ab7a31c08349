#include "zes/serialization.hpp"

#include "zes/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>

namespace zes {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void append_le(std::vector<std::uint8_t>& out, T value)
{
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(std::begin(raw), std::end(raw));
    }
    out.insert(out.end(), std::begin(raw), std::end(raw));
}

template <typename T>
T read_le(const std::uint8_t* p)
{
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(std::begin(raw), std::end(raw));
    }
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
}

std::size_t dtype_size(const std::string& dtype)
{
    if (dtype == "<u1") return 1;
    if (dtype == "<i4" || dtype == "<f4") return 4;
    if (dtype == "<f8") return 8;
    throw IoError(fmt::format("unsupported npy dtype '{}'", dtype));
}

// Field table shared by config_to_json / config_from_json.
struct ConfigField {
    const char* name;
    std::function<Json(const PipelineConfig&)> get;
    std::function<void(PipelineConfig&, const Json&)> set;
};

template <typename T>
ConfigField field(const char* name, T PipelineConfig::*member)
{
    return {name, [member](const PipelineConfig& c) { return Json(c.*member); },
            [name, member](PipelineConfig& c, const Json& v) {
                if constexpr (std::is_same_v<T, bool>) {
                    if (!v.is_boolean()) {
                        throw ConfigError(fmt::format("config key '{}' must be a boolean", name));
                    }
                } else if constexpr (std::is_integral_v<T>) {
                    if (!v.is_number_integer()) {
                        throw ConfigError(fmt::format("config key '{}' must be an integer", name));
                    }
                } else {
                    if (!v.is_number()) {
                        throw ConfigError(fmt::format("config key '{}' must be a number", name));
                    }
                }
                c.*member = v.get<T>();
            }};
}

const std::vector<ConfigField>& config_fields()
{
    static const std::vector<ConfigField> fields = {
        field("alpha", &PipelineConfig::alpha),
        field("w_sim", &PipelineConfig::w_sim),
        field("w_ent", &PipelineConfig::w_ent),
        field("k_peaks", &PipelineConfig::k_peaks),
        field("percentile_start", &PipelineConfig::percentile_start),
        field("percentile_step", &PipelineConfig::percentile_step),
        field("detection_threshold", &PipelineConfig::detection_threshold),
        field("roi_low", &PipelineConfig::roi_low),
        field("roi_high", &PipelineConfig::roi_high),
        field("entropy_bins", &PipelineConfig::entropy_bins),
        field("peak_window", &PipelineConfig::peak_window),
        field("average_single_exemplar_counts", &PipelineConfig::average_single_exemplar_counts),
    };
    return fields;
}

template <typename T>
T get_as(const Json& doc, const char* key)
{
    if (!doc.is_object() || !doc.contains(key)) {
        throw ConfigError(fmt::format("missing key '{}'", key));
    }
    try {
        return doc.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("bad value for '{}': {}", key, e.what()));
    }
}

Json diagnostics_to_json(const StageDiagnostics& d)
{
    Json j = {{"candidate_count", d.candidate_count}, {"fallback_used", d.fallback_used},
              {"winner_score", d.winner_score}};
    if (d.final_p) j["final_p"] = *d.final_p;
    if (d.pseudo_gt) j["pseudo_gt"] = *d.pseudo_gt;
    if (d.majority_size) j["majority_size"] = *d.majority_size;
    return j;
}

StageDiagnostics diagnostics_from_json(const Json& j)
{
    StageDiagnostics d;
    d.candidate_count = get_as<std::size_t>(j, "candidate_count");
    d.fallback_used = get_as<bool>(j, "fallback_used");
    d.winner_score = get_as<double>(j, "winner_score");
    if (j.contains("final_p")) d.final_p = get_as<double>(j, "final_p");
    if (j.contains("pseudo_gt")) d.pseudo_gt = get_as<double>(j, "pseudo_gt");
    if (j.contains("majority_size")) d.majority_size = get_as<std::size_t>(j, "majority_size");
    return d;
}

Json boxes_to_json(const std::vector<BBox>& boxes)
{
    Json arr = Json::array();
    for (const auto& b : boxes) {
        arr.push_back(box_to_json(b));
    }
    return arr;
}

std::vector<BBox> boxes_from_json(const Json& arr)
{
    if (!arr.is_array()) {
        throw ConfigError("expected an array of boxes");
    }
    std::vector<BBox> out;
    for (const auto& b : arr) {
        out.push_back(box_from_json(b));
    }
    return out;
}

} // namespace

Json config_to_json(const PipelineConfig& cfg)
{
    Json j = Json::object();
    for (const auto& f : config_fields()) {
        j[f.name] = f.get(cfg);
    }
    return j;
}

PipelineConfig config_from_json(const Json& doc)
{
    if (!doc.is_object()) {
        throw ConfigError("config document must be a JSON object");
    }
    PipelineConfig cfg;
    const auto& fields = config_fields();
    for (const auto& [key, value] : doc.items()) {
        const auto it = std::find_if(fields.begin(), fields.end(), [&](const ConfigField& f) { return key == f.name; });
        if (it == fields.end()) {
            throw ConfigError(fmt::format("unknown config key '{}'", key));
        }
        it->set(cfg, value);
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path)
{
    const std::string text = read_text_file(path);
    try {
        return config_from_json(Json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

Json box_to_json(const BBox& box) { return Json::array({box.x0, box.y0, box.x1, box.y1}); }

BBox box_from_json(const Json& doc)
{
    if (!doc.is_array() || doc.size() != 4 ||
        !std::all_of(doc.begin(), doc.end(), [](const Json& v) { return v.is_number_integer(); })) {
        throw ConfigError("a box is an array of four integers [x0, y0, x1, y1]");
    }
    return BBox{doc[0].get<int>(), doc[1].get<int>(), doc[2].get<int>(), doc[3].get<int>()};
}

Json scene_to_json(const Scene& scene)
{
    Json objects = Json::array();
    for (const auto& o : scene.objects) {
        objects.push_back({{"center", {o.cx, o.cy}},
                           {"semi_axes", {o.semi_a, o.semi_b}},
                           {"rotation", o.rotation},
                           {"class_id", o.class_id}});
    }
    return {{"schema_version", kSceneSchemaVersion},
            {"width", scene.width},
            {"height", scene.height},
            {"seed", scene.seed},
            {"objects", objects},
            {"merge_rate", scene.merge_rate},
            {"similarity_noise", scene.similarity_noise},
            {"density_kernel", scene.density_kernel},
            {"feature_noise", scene.feature_noise},
            {"background_class_id", scene.background_class_id}};
}

Scene scene_from_json(const Json& doc)
{
    const int version = get_as<int>(doc, "schema_version");
    if (version != kSceneSchemaVersion) {
        throw ConfigError(fmt::format("scene schema_version {} is not supported (expected {})", version,
                                      kSceneSchemaVersion));
    }
    Scene s;
    s.width = get_as<int>(doc, "width");
    s.height = get_as<int>(doc, "height");
    s.seed = get_as<std::uint64_t>(doc, "seed");
    s.merge_rate = get_as<double>(doc, "merge_rate");
    s.similarity_noise = get_as<double>(doc, "similarity_noise");
    s.density_kernel = get_as<double>(doc, "density_kernel");
    s.feature_noise = get_as<double>(doc, "feature_noise");
    s.background_class_id = get_as<int>(doc, "background_class_id");
    for (const auto& o : get_as<Json>(doc, "objects")) {
        const auto center = get_as<std::vector<double>>(o, "center");
        const auto axes = get_as<std::vector<double>>(o, "semi_axes");
        if (center.size() != 2 || axes.size() != 2) {
            throw ConfigError("object center and semi_axes need two values each");
        }
        s.objects.push_back({center[0], center[1], axes[0], axes[1], get_as<double>(o, "rotation"),
                             get_as<int>(o, "class_id")});
    }
    if (s.width < 1 || s.height < 1) {
        throw ConfigError("scene dimensions must be positive");
    }
    if (s.objects.empty()) {
        throw ConfigError("scene has no objects");
    }
    for (const auto& o : s.objects) {
        if (o.semi_a < 2.0 || o.semi_b < 2.0) {
            throw ConfigError("object semi-axes must be at least 2 px");
        }
        if (o.cx < 0.0 || o.cy < 0.0 || o.cx >= s.width || o.cy >= s.height) {
            throw ConfigError(fmt::format("object centre ({}, {}) outside the image", o.cx, o.cy));
        }
    }
    if (!(s.merge_rate >= 0.0 && s.merge_rate <= 1.0)) {
        throw ConfigError("merge_rate must lie in [0,1]");
    }
    if (!(s.density_kernel > 0.0) || s.similarity_noise < 0.0 || s.feature_noise < 0.0) {
        throw ConfigError("noise levels must be nonnegative and the density kernel positive");
    }
    return s;
}

Scene load_scene(const std::filesystem::path& path)
{
    const std::string text = read_text_file(path);
    try {
        return scene_from_json(Json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void save_scene(const Scene& scene, const std::filesystem::path& path)
{
    write_text_file(path, scene_to_json(scene).dump(2) + "\n");
}

Json result_to_json(const PipelineResult& r)
{
    Json exemplars = Json::array();
    for (const auto& e : r.exemplars) {
        exemplars.push_back({{"box", box_to_json(e.box)}, {"stage", to_string(e.stage)}, {"score", e.score}});
    }
    return {{"exemplars", exemplars},
            {"final_count", r.final_count},
            {"empty", r.empty},
            {"diagnostics",
             {{"DAE", diagnostics_to_json(r.dae)},
              {"DGE", diagnostics_to_json(r.dge)},
              {"FCE", diagnostics_to_json(r.fce)}}},
            {"flags", r.flags},
            {"ranked",
             {{"DAE", boxes_to_json(r.dae_ranked)},
              {"DGE", boxes_to_json(r.dge_ranked)},
              {"FCE", boxes_to_json(r.fce_ranked)}}},
            {"timings_ms",
             {{"dae", r.timings.dae_ms},
              {"dge", r.timings.dge_ms},
              {"fce", r.timings.fce_ms},
              {"count", r.timings.count_ms},
              {"total", r.timings.total_ms}}}};
}

PipelineResult result_from_json(const Json& doc)
{
    PipelineResult r;
    for (const auto& e : get_as<Json>(doc, "exemplars")) {
        const auto stage = get_as<std::string>(e, "stage");
        r.exemplars.push_back({box_from_json(get_as<Json>(e, "box")), stage_from_string(stage),
                               get_as<double>(e, "score")});
    }
    r.final_count = get_as<double>(doc, "final_count");
    r.empty = get_as<bool>(doc, "empty");
    const Json diag = get_as<Json>(doc, "diagnostics");
    r.dae = diagnostics_from_json(get_as<Json>(diag, "DAE"));
    r.dge = diagnostics_from_json(get_as<Json>(diag, "DGE"));
    r.fce = diagnostics_from_json(get_as<Json>(diag, "FCE"));
    r.flags = get_as<std::vector<std::string>>(doc, "flags");
    const Json ranked = get_as<Json>(doc, "ranked");
    r.dae_ranked = boxes_from_json(get_as<Json>(ranked, "DAE"));
    r.dge_ranked = boxes_from_json(get_as<Json>(ranked, "DGE"));
    r.fce_ranked = boxes_from_json(get_as<Json>(ranked, "FCE"));
    if (doc.contains("timings_ms")) {
        const Json t = doc.at("timings_ms");
        r.timings = {get_as<double>(t, "dae"), get_as<double>(t, "dge"), get_as<double>(t, "fce"),
                     get_as<double>(t, "count"), get_as<double>(t, "total")};
    }
    return r;
}

std::size_t NpyArray::element_count() const
{
    std::size_t n = 1;
    for (const auto d : shape) {
        n *= d;
    }
    return n;
}

NpyArray npy_from_map(const ScalarMap& map)
{
    NpyArray a{"<f8", {static_cast<std::size_t>(map.height()), static_cast<std::size_t>(map.width())}, {}};
    a.bytes.reserve(map.size() * 8);
    for (const double v : map.values()) {
        append_le(a.bytes, v);
    }
    return a;
}

NpyArray npy_from_labels(const std::vector<std::int32_t>& labels, int width, int height)
{
    if (labels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw ContractError("label count does not match width x height");
    }
    NpyArray a{"<i4", {static_cast<std::size_t>(height), static_cast<std::size_t>(width)}, {}};
    for (const auto v : labels) {
        append_le(a.bytes, v);
    }
    return a;
}

NpyArray npy_from_boxes(const std::vector<BBox>& boxes)
{
    NpyArray a{"<i4", {boxes.size(), 4}, {}};
    for (const auto& b : boxes) {
        for (const std::int32_t v : {b.x0, b.y0, b.x1, b.y1}) {
            append_le(a.bytes, v);
        }
    }
    return a;
}

ScalarMap map_from_npy(const NpyArray& array)
{
    if (array.dtype != "<f8" || array.shape.size() != 2) {
        throw IoError("expected a 2-d <f8 array");
    }
    const int h = static_cast<int>(array.shape[0]), w = static_cast<int>(array.shape[1]);
    std::vector<double> values(array.element_count());
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = read_le<double>(array.bytes.data() + 8 * i);
    }
    return ScalarMap(w, h, std::move(values));
}

void write_npy(const NpyArray& array, const std::filesystem::path& path)
{
    if (array.bytes.size() != array.element_count() * dtype_size(array.dtype)) {
        throw ContractError("npy payload size does not match dtype and shape");
    }
    std::string shape = "(";
    for (std::size_t i = 0; i < array.shape.size(); ++i) {
        shape += fmt::format("{}, ", array.shape[i]);
    }
    if (array.shape.size() > 1) {
        shape.resize(shape.size() - 2);
    } else if (array.shape.size() == 1) {
        shape.resize(shape.size() - 1);
    }
    shape += ")";
    std::string header = fmt::format("{{'descr': '{}', 'fortran_order': False, 'shape': {}, }}", array.dtype, shape);
    // magic(6) + version(2) + header_len(2) + header, padded to 64 with '\n' last
    const std::size_t unpadded = 10 + header.size() + 1;
    header.append((64 - unpadded % 64) % 64, ' ');
    header += '\n';

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError(fmt::format("cannot open {} for writing", path.string()));
    }
    const char magic[] = {'\x93', 'N', 'U', 'M', 'P', 'Y', 1, 0};
    out.write(magic, sizeof magic);
    const auto len = static_cast<std::uint16_t>(header.size());
    const char len_le[] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
    out.write(len_le, 2);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(array.bytes.data()), static_cast<std::streamsize>(array.bytes.size()));
    if (!out) {
        throw IoError(fmt::format("failed writing {}", path.string()));
    }
}

NpyArray read_npy(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(fmt::format("cannot open {}", path.string()));
    }
    std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (raw.size() < 10 || raw[0] != 0x93 || std::memcmp(raw.data() + 1, "NUMPY", 5) != 0 || raw[6] != 1) {
        throw IoError(fmt::format("{} is not a version 1 npy file", path.string()));
    }
    const std::size_t header_len = raw[8] | (static_cast<std::size_t>(raw[9]) << 8);
    if (raw.size() < 10 + header_len) {
        throw IoError("truncated npy header");
    }
    const std::string header(raw.begin() + 10, raw.begin() + 10 + static_cast<std::ptrdiff_t>(header_len));

    NpyArray a;
    const auto descr = header.find("'descr': '");
    const auto shape_at = header.find("'shape': (");
    if (descr == std::string::npos || shape_at == std::string::npos ||
        header.find("'fortran_order': False") == std::string::npos) {
        throw IoError("unsupported npy header");
    }
    a.dtype = header.substr(descr + 10, header.find('\'', descr + 10) - descr - 10);
    std::istringstream dims(header.substr(shape_at + 10, header.find(')', shape_at) - shape_at - 10));
    for (std::string tok; std::getline(dims, tok, ',');) {
        if (tok.find_first_not_of(' ') != std::string::npos) {
            a.shape.push_back(std::stoul(tok));
        }
    }
    const std::size_t expected = a.element_count() * dtype_size(a.dtype);
    if (raw.size() - 10 - header_len != expected) {
        throw IoError(fmt::format("{}: payload is {} bytes, header implies {}", path.string(),
                                  raw.size() - 10 - header_len, expected));
    }
    a.bytes.assign(raw.begin() + 10 + static_cast<std::ptrdiff_t>(header_len), raw.end());
    return a;
}

void save_scene_bundle(const Scene& scene, const std::filesystem::path& dir, const std::string& stem)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
    }
    save_scene(scene, dir / (stem + ".json"));
    const auto truth = render_ground_truth(scene);
    write_npy(npy_from_map(truth.density), dir / (stem + "_density.npy"));
    write_npy(npy_from_map(truth.similarity), dir / (stem + "_similarity.npy"));
    write_npy(npy_from_labels(truth.labels, scene.width, scene.height), dir / (stem + "_labels.npy"));
    write_npy(npy_from_boxes(truth.boxes), dir / (stem + "_boxes.npy"));
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError(fmt::format("cannot open {}", path.string()));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out || !(out << text) || !out.flush()) {
        throw IoError(fmt::format("cannot write {}", path.string()));
    }
}

} // namespace zes
