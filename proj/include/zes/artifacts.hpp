#pragma once

#include "zes/core_types.hpp"
#include "zes/pipeline.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace zes {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    bool operator==(const Rgb&) const = default;
};

/// 8-bit RGB image, row-major.
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, Rgb fill = {});

    int width() const { return width_; }
    int height() const { return height_; }
    Rgb& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    Rgb at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    const std::vector<Rgb>& pixels() const { return pixels_; }

    bool operator==(const Raster&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Rgb> pixels_;
};

// Binary PPM (P6, maxval 255).
void write_ppm(const Raster& raster, const std::filesystem::path& path);
Raster read_ppm(const std::filesystem::path& path);

// Fixed 256-entry colormap (dark blue through cyan and yellow to red).
const std::array<Rgb, 256>& colormap();

// Min-max normalizes the map to [0,255] and looks each value up in
// colormap(). A constant map renders as entry 0.
Raster heatmap(const ScalarMap& map);

// Draws a one-pixel outline of the box, clipped to the raster.
void draw_box(Raster& raster, const BBox& box, Rgb color);

Rgb stage_color(Stage stage);

// Grayscale rendering of the similarity map with the exemplar boxes drawn
// on top (DAE red, DGE green, FCE blue). Drawn in reverse slot order so the
// DAE outline stays visible when slots coincide.
Raster exemplar_overlay(const ScalarMap& background, const ExemplarSet& exemplars);

struct ArtifactPaths {
    std::filesystem::path overlay;
    std::filesystem::path density;
    std::filesystem::path similarity;
    std::filesystem::path result;
};

// Writes overlay.ppm, density.ppm, similarity.ppm and result.json into dir
// (created when missing). Throws IoError when anything cannot be written.
ArtifactPaths emit_artifacts(const PipelineResult& result, const ImageRef& image, const PipelineMaps& maps,
                             const std::filesystem::path& dir);

} // namespace zes
