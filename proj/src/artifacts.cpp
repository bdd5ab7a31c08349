#include "zes/artifacts.hpp"

#include "zes/errors.hpp"
#include "zes/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

namespace zes {

Raster::Raster(int width, int height, Rgb fill)
    : width_(width), height_(height), pixels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill)
{
    if (width < 1 || height < 1) {
        throw ContractError("raster dimensions must be positive");
    }
}

void write_ppm(const Raster& raster, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError(fmt::format("cannot open {} for writing", path.string()));
    }
    out << "P6\n" << raster.width() << ' ' << raster.height() << "\n255\n";
    for (const auto& p : raster.pixels()) {
        const char rgb[] = {static_cast<char>(p.r), static_cast<char>(p.g), static_cast<char>(p.b)};
        out.write(rgb, 3);
    }
    if (!out.flush()) {
        throw IoError(fmt::format("failed writing {}", path.string()));
    }
}

namespace {

// Next whitespace-separated header token, skipping '#' comments.
std::string ppm_token(std::istream& in)
{
    std::string tok;
    char c;
    while (in.get(c)) {
        if (c == '#') {
            std::string skip;
            std::getline(in, skip);
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            if (!tok.empty()) {
                return tok;
            }
        } else {
            tok += c;
        }
    }
    return tok;
}

} // namespace

Raster read_ppm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(fmt::format("cannot open {}", path.string()));
    }
    if (ppm_token(in) != "P6") {
        throw IoError(fmt::format("{} is not a binary PPM", path.string()));
    }
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(ppm_token(in));
        h = std::stoi(ppm_token(in));
        maxval = std::stoi(ppm_token(in));
    } catch (const std::exception&) {
        throw IoError(fmt::format("{}: malformed PPM header", path.string()));
    }
    if (w < 1 || h < 1 || maxval != 255) {
        throw IoError(fmt::format("{}: unsupported PPM geometry or maxval", path.string()));
    }
    Raster raster(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            char rgb[3];
            if (!in.read(rgb, 3)) {
                throw IoError(fmt::format("{}: truncated pixel data", path.string()));
            }
            raster.at(x, y) = {static_cast<std::uint8_t>(rgb[0]), static_cast<std::uint8_t>(rgb[1]),
                               static_cast<std::uint8_t>(rgb[2])};
        }
    }
    return raster;
}

const std::array<Rgb, 256>& colormap()
{
    static const std::array<Rgb, 256> table = [] {
        // piecewise-linear through five anchors
        constexpr double anchors[5][3] = {{0, 0, 96}, {0, 96, 255}, {0, 224, 224}, {255, 224, 0}, {224, 0, 0}};
        std::array<Rgb, 256> t{};
        for (int i = 0; i < 256; ++i) {
            const double pos = i / 255.0 * 4.0;
            const int seg = std::min(static_cast<int>(pos), 3);
            const double f = pos - seg;
            auto mix = [&](int c) {
                return static_cast<std::uint8_t>(std::lround(anchors[seg][c] * (1.0 - f) + anchors[seg + 1][c] * f));
            };
            t[static_cast<std::size_t>(i)] = {mix(0), mix(1), mix(2)};
        }
        return t;
    }();
    return table;
}

Raster heatmap(const ScalarMap& map)
{
    Raster raster(map.width(), map.height());
    const auto values = map.values();
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double span = *hi - *lo;
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) {
            const double t = span > 0.0 ? (map(x, y) - *lo) / span : 0.0;
            const auto idx = static_cast<std::size_t>(std::clamp(std::lround(t * 255.0), 0L, 255L));
            raster.at(x, y) = colormap()[idx];
        }
    }
    return raster;
}

void draw_box(Raster& raster, const BBox& box, Rgb color)
{
    auto plot = [&](int x, int y) {
        if (x >= 0 && y >= 0 && x < raster.width() && y < raster.height()) {
            raster.at(x, y) = color;
        }
    };
    for (int x = box.x0; x < box.x1; ++x) {
        plot(x, box.y0);
        plot(x, box.y1 - 1);
    }
    for (int y = box.y0; y < box.y1; ++y) {
        plot(box.x0, y);
        plot(box.x1 - 1, y);
    }
}

Rgb stage_color(Stage stage)
{
    switch (stage) {
    case Stage::DAE: return {255, 0, 0};
    case Stage::DGE: return {0, 255, 0};
    case Stage::FCE: return {0, 0, 255};
    }
    return {};
}

Raster exemplar_overlay(const ScalarMap& background, const ExemplarSet& exemplars)
{
    Raster raster(background.width(), background.height());
    const auto values = background.values();
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double span = *hi - *lo;
    for (int y = 0; y < background.height(); ++y) {
        for (int x = 0; x < background.width(); ++x) {
            const double t = span > 0.0 ? (background(x, y) - *lo) / span : 0.0;
            const auto g = static_cast<std::uint8_t>(std::lround(40.0 + 160.0 * t));
            raster.at(x, y) = {g, g, g};
        }
    }
    for (auto it = exemplars.rbegin(); it != exemplars.rend(); ++it) {
        draw_box(raster, it->box, stage_color(it->stage));
    }
    return raster;
}

ArtifactPaths emit_artifacts(const PipelineResult& result, const ImageRef& image, const PipelineMaps& maps,
                             const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
    }
    auto or_blank = [&](const ScalarMap& m) { return m.empty() ? ScalarMap(image.width, image.height) : m; };

    ArtifactPaths paths{dir / "overlay.ppm", dir / "density.ppm", dir / "similarity.ppm", dir / "result.json"};
    write_ppm(exemplar_overlay(or_blank(maps.similarity), result.exemplars), paths.overlay);
    write_ppm(heatmap(or_blank(maps.final_density)), paths.density);
    write_ppm(heatmap(or_blank(maps.similarity)), paths.similarity);
    Json doc = result_to_json(result);
    doc["image"] = {{"id", image.id}, {"width", image.width}, {"height", image.height}};
    write_text_file(paths.result, doc.dump(2) + "\n");
    return paths;
}

} // namespace zes
