#include "zes/core_types.hpp"

#include "zes/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace zes {

ImageRef ImageRef::make(std::string id, int width, int height)
{
    if (width < 1 || height < 1) {
        throw ConfigError(fmt::format("image '{}' has invalid size {}x{}", id, width, height));
    }
    return ImageRef{std::move(id), width, height};
}

ClassPrompt ClassPrompt::make(std::string_view text)
{
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!text.empty() && is_space(static_cast<unsigned char>(text.front()))) {
        text.remove_prefix(1);
    }
    while (!text.empty() && is_space(static_cast<unsigned char>(text.back()))) {
        text.remove_suffix(1);
    }
    if (text.empty()) {
        throw ConfigError("class prompt is empty");
    }
    return ClassPrompt{std::string(text)};
}

BBox full_box(int width, int height) { return BBox{0, 0, width, height}; }

BBox union_box(const BBox& a, const BBox& b)
{
    return BBox{std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1), std::max(a.y1, b.y1)};
}

void require_in_bounds(const BBox& box, int width, int height)
{
    if (!box.valid_for(width, height)) {
        throw BoundsError(fmt::format("box ({},{},{},{}) invalid for {}x{} grid", box.x0, box.y0, box.x1, box.y1,
                                      width, height));
    }
}

PixelRange box_pixels(const BBox& box, int map_width, int map_height)
{
    require_in_bounds(box, map_width, map_height);
    return PixelRange(box);
}

// ---------------------------------------------------------------------------
// ScalarMap

ScalarMap::ScalarMap(int width, int height, double fill)
    : width_(width), height_(height),
      values_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)), fill)
{
    if (width < 1 || height < 1) {
        throw ConfigError(fmt::format("scalar map size {}x{} is empty", width, height));
    }
}

ScalarMap::ScalarMap(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values))
{
    if (width < 1 || height < 1) {
        throw ConfigError(fmt::format("scalar map size {}x{} is empty", width, height));
    }
    if (values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw ConfigError(fmt::format("scalar map expects {} values, got {}",
                                      static_cast<std::size_t>(width) * height, values_.size()));
    }
}

double ScalarMap::at(Point p) const
{
    if (p.x < 0 || p.y < 0 || p.x >= width_ || p.y >= height_) {
        throw BoundsError(fmt::format("point ({},{}) outside {}x{} map", p.x, p.y, width_, height_));
    }
    return (*this)(p.x, p.y);
}

double ScalarMap::sum() const
{
    double total = 0.0;
    for (double v : values_) {
        total += v;
    }
    return total;
}

bool ScalarMap::all_finite() const
{
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Mask

Mask::Mask(int width, int height)
    : width_(width), height_(height),
      bits_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)), 0)
{
    if (width < 1 || height < 1) {
        throw ConfigError(fmt::format("mask size {}x{} is empty", width, height));
    }
}

Mask::Mask(int width, int height, std::vector<std::uint8_t> bits) : width_(width), height_(height), bits_(std::move(bits))
{
    if (width < 1 || height < 1 || bits_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw ConfigError(fmt::format("mask buffer does not match {}x{}", width, height));
    }
    for (auto& b : bits_) {
        b = b != 0 ? 1 : 0;
    }
}

std::size_t Mask::count() const
{
    return static_cast<std::size_t>(std::count_if(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; }));
}

BBox mask_to_bbox(const Mask& mask)
{
    int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.contains(x, y)) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
        }
    }
    if (x1 < 0) {
        throw EmptyMaskError("mask has no member pixels");
    }
    return BBox{x0, y0, x1 + 1, y1 + 1};
}

// ---------------------------------------------------------------------------
// FeatureMap

FeatureMap::FeatureMap(int channels, int width, int height)
    : channels_(channels), width_(width), height_(height), base_width_(width), base_height_(height)
{
    if (channels < 1 || width < 1 || height < 1) {
        throw ConfigError(fmt::format("feature map shape {}x{}x{} is empty", channels, height, width));
    }
    data_.assign(static_cast<std::size_t>(channels) * static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                 0.0f);
}

void FeatureMap::set_base_grid(int width, int height)
{
    if (width < 1 || height < 1) {
        throw ConfigError("feature base grid must be positive");
    }
    base_width_ = width;
    base_height_ = height;
}

BBox project_box(const BBox& box, const ImageRef& image, int grid_width, int grid_height)
{
    require_in_bounds(box, image.width, image.height);
    const double sx = static_cast<double>(grid_width) / image.width;
    const double sy = static_cast<double>(grid_height) / image.height;
    BBox out{static_cast<int>(std::floor(box.x0 * sx)), static_cast<int>(std::floor(box.y0 * sy)),
             static_cast<int>(std::ceil(box.x1 * sx)), static_cast<int>(std::ceil(box.y1 * sy))};
    out.x0 = std::clamp(out.x0, 0, grid_width - 1);
    out.y0 = std::clamp(out.y0, 0, grid_height - 1);
    out.x1 = std::clamp(out.x1, out.x0 + 1, grid_width);
    out.y1 = std::clamp(out.y1, out.y0 + 1, grid_height);
    return out;
}

// ---------------------------------------------------------------------------
// Descriptor

Descriptor Descriptor::normalize(std::vector<double> raw)
{
    double sq = 0.0;
    for (double v : raw) {
        sq += v * v;
    }
    const double n = std::sqrt(sq);
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw DegenerateDescriptorError("cannot normalize a zero or non-finite feature vector");
    }
    for (double& v : raw) {
        v /= n;
    }
    return Descriptor(std::move(raw));
}

double Descriptor::norm() const
{
    double sq = 0.0;
    for (double v : values_) {
        sq += v * v;
    }
    return std::sqrt(sq);
}

std::string_view to_string(Stage stage)
{
    switch (stage) {
    case Stage::DAE:
        return "DAE";
    case Stage::DGE:
        return "DGE";
    case Stage::FCE:
        return "FCE";
    }
    return "?";
}

Stage stage_from_string(std::string_view text)
{
    if (text == "DAE") {
        return Stage::DAE;
    }
    if (text == "DGE") {
        return Stage::DGE;
    }
    if (text == "FCE") {
        return Stage::FCE;
    }
    throw ConfigError(fmt::format("unknown stage tag '{}'", text));
}

// ---------------------------------------------------------------------------
// PipelineConfig

void PipelineConfig::validate() const
{
    auto fail = [](const std::string& what) { throw ConfigError(what); };
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        fail(fmt::format("alpha must lie in [0,1], got {}", alpha));
    }
    if (!(w_sim >= 0.0 && w_ent >= 0.0) || std::abs(w_sim + w_ent - 1.0) > 1e-9) {
        fail(fmt::format("w_sim and w_ent must be nonnegative and sum to 1, got {} + {}", w_sim, w_ent));
    }
    if (k_peaks < 1) {
        fail("k_peaks must be positive");
    }
    if (!(percentile_start >= 0.0 && percentile_start <= 100.0)) {
        fail("percentile_start must lie in [0,100]");
    }
    if (!(percentile_step > 0.0)) {
        fail("percentile_step must be positive");
    }
    const double steps = percentile_start / percentile_step;
    if (std::abs(steps - std::round(steps)) > 1e-9) {
        fail(fmt::format("percentile_start {} is not reachable down to 0 in steps of {}", percentile_start,
                         percentile_step));
    }
    if (!(detection_threshold >= 0.0 && detection_threshold <= 1.0)) {
        fail("detection_threshold must lie in [0,1]");
    }
    if (!(roi_low < roi_high)) {
        fail("roi_low must be below roi_high");
    }
    if (entropy_bins < 2) {
        fail("entropy_bins must be at least 2");
    }
    if (peak_window < 3 || peak_window % 2 == 0) {
        fail("peak_window must be an odd integer >= 3");
    }
}

} // namespace zes
