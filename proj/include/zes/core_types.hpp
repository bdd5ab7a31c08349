#pragma once

#include <cstddef>
#include <cstdint>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace zes {

struct ImageRef {
    std::string id;
    int width = 0;
    int height = 0;

    // Throws ConfigError when either dimension is below one pixel.
    static ImageRef make(std::string id, int width, int height);

    bool operator==(const ImageRef&) const = default;
};

struct ClassPrompt {
    std::string text;

    // Trims surrounding whitespace; throws ConfigError on an empty result.
    static ClassPrompt make(std::string_view text);

    bool operator==(const ClassPrompt&) const = default;
};

struct Point {
    int x = 0;
    int y = 0;

    bool operator==(const Point&) const = default;
};

/// Half-open pixel box [x0, x1) x [y0, y1), origin top-left.
struct BBox {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    long long area() const { return static_cast<long long>(width()) * height(); }
    bool contains(Point p) const { return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1; }
    bool contains(const BBox& other) const
    {
        return other.x0 >= x0 && other.y0 >= y0 && other.x1 <= x1 && other.y1 <= y1;
    }
    // Nonempty and inside a width x height grid.
    bool valid_for(int grid_width, int grid_height) const
    {
        return x0 >= 0 && y0 >= 0 && x0 < x1 && y0 < y1 && x1 <= grid_width && y1 <= grid_height;
    }

    bool operator==(const BBox&) const = default;
};

BBox full_box(int width, int height);
BBox union_box(const BBox& a, const BBox& b);
// Throws BoundsError unless box.valid_for(width, height).
void require_in_bounds(const BBox& box, int width, int height);

struct Detection {
    BBox box;
    double confidence = 0.0;

    bool operator==(const Detection&) const = default;
};

/// Row-major enumeration of the pixels of a box (the pixel set of a region).
class PixelRange {
public:
    class iterator {
    public:
        using iterator_category = std::forward_iterator_tag;
        using value_type = Point;
        using difference_type = std::ptrdiff_t;
        using pointer = const Point*;
        using reference = Point;

        iterator() = default;
        iterator(int x0, int x1, Point cur) : x0_(x0), x1_(x1), cur_(cur) {}

        Point operator*() const { return cur_; }
        iterator& operator++()
        {
            if (++cur_.x == x1_) {
                cur_.x = x0_;
                ++cur_.y;
            }
            return *this;
        }
        iterator operator++(int)
        {
            auto tmp = *this;
            ++*this;
            return tmp;
        }
        bool operator==(const iterator& o) const { return cur_ == o.cur_; }

    private:
        int x0_ = 0;
        int x1_ = 0;
        Point cur_{};
    };

    explicit PixelRange(const BBox& box) : box_(box) {}

    iterator begin() const { return {box_.x0, box_.x1, {box_.x0, box_.y0}}; }
    iterator end() const { return {box_.x0, box_.x1, {box_.x0, box_.y1}}; }
    std::size_t size() const { return static_cast<std::size_t>(box_.area()); }

private:
    BBox box_;
};

// Throws BoundsError when the box does not fit a map_width x map_height grid.
PixelRange box_pixels(const BBox& box, int map_width, int map_height);

/// Dense H x W grid of reals, row-major. Houses similarity and density maps.
class ScalarMap {
public:
    ScalarMap() = default;
    ScalarMap(int width, int height, double fill = 0.0);
    ScalarMap(int width, int height, std::vector<double> values);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double operator()(int x, int y) const { return values_[index(x, y)]; }
    double& operator()(int x, int y) { return values_[index(x, y)]; }
    double at(Point p) const;

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    double sum() const;
    bool all_finite() const;

    bool operator==(const ScalarMap&) const = default;

private:
    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

/// Binary pixel membership grid.
class Mask {
public:
    Mask() = default;
    Mask(int width, int height);
    Mask(int width, int height, std::vector<std::uint8_t> bits);

    int width() const { return width_; }
    int height() const { return height_; }

    bool contains(int x, int y) const
    {
        return x >= 0 && y >= 0 && x < width_ && y < height_ && bits_[index(x, y)] != 0;
    }
    void set(int x, int y, bool on = true) { bits_[index(x, y)] = on ? 1 : 0; }

    std::size_t count() const;
    bool empty() const { return count() == 0; }
    std::span<const std::uint8_t> bits() const { return bits_; }

    bool operator==(const Mask&) const = default;

private:
    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

// Tightest half-open box around every member pixel. Throws EmptyMaskError.
BBox mask_to_bbox(const Mask& mask);

/// C-channel feature grid, stored cell-major (all channels of a cell are
/// contiguous). `base_width`/`base_height` describe the encoder grid the map
/// was upsampled from; equal to width/height when no upsampling happened.
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(int channels, int width, int height);

    int channels() const { return channels_; }
    int width() const { return width_; }
    int height() const { return height_; }
    int base_width() const { return base_width_; }
    int base_height() const { return base_height_; }
    void set_base_grid(int width, int height);

    std::span<const float> cell(int x, int y) const
    {
        return {data_.data() + offset(x, y), static_cast<std::size_t>(channels_)};
    }
    std::span<float> cell(int x, int y) { return {data_.data() + offset(x, y), static_cast<std::size_t>(channels_)}; }

    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }

    bool operator==(const FeatureMap&) const = default;

private:
    std::size_t offset(int x, int y) const
    {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_);
    }

    int channels_ = 0;
    int width_ = 0;
    int height_ = 0;
    int base_width_ = 0;
    int base_height_ = 0;
    std::vector<float> data_;
};

/// Projection of an image-space box onto a feature grid: corners scaled,
/// rounded outward, clamped. Always yields at least one cell.
BBox project_box(const BBox& box, const ImageRef& image, int grid_width, int grid_height);

/// Unit-norm feature vector, built by normalize(). adopt() takes a vector
/// claimed to be unit norm as-is; consumers such as cosine() check the claim.
class Descriptor {
public:
    Descriptor() = default;

    // Throws DegenerateDescriptorError for a zero (or non-finite) vector.
    static Descriptor normalize(std::vector<double> raw);
    static Descriptor adopt(std::vector<double> unit) { return Descriptor(std::move(unit)); }

    std::span<const double> values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double norm() const;

    bool operator==(const Descriptor&) const = default;

private:
    explicit Descriptor(std::vector<double> v) : values_(std::move(v)) {}
    std::vector<double> values_;
};

enum class Stage { DAE, DGE, FCE };

std::string_view to_string(Stage stage);
Stage stage_from_string(std::string_view text);

struct Exemplar {
    BBox box;
    Stage stage = Stage::DAE;
    double score = 0.0;

    bool operator==(const Exemplar&) const = default;
};

using ExemplarSet = std::vector<Exemplar>;

struct PipelineConfig {
    double alpha = 0.5;
    double w_sim = 0.5;
    double w_ent = 0.5;
    int k_peaks = 16;
    double percentile_start = 90.0;
    double percentile_step = 10.0;
    double detection_threshold = 0.15;
    double roi_low = 1.0;
    double roi_high = 2.0;
    int entropy_bins = 32;
    int peak_window = 5;
    // Experimental: final count as the mean of three single-exemplar counts
    // instead of one pass conditioned on all three exemplars.
    bool average_single_exemplar_counts = false;

    // Throws ConfigError on the first violated invariant.
    void validate() const;

    bool operator==(const PipelineConfig&) const = default;
};

} // namespace zes
