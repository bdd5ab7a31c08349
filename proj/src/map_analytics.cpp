#include "zes/map_analytics.hpp"

#include "zes/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace zes {

double normalized_entropy(std::span<const double> values, int bins)
{
    if (bins < 2) {
        throw ConfigError(fmt::format("entropy needs at least 2 bins, got {}", bins));
    }
    if (values.empty()) {
        throw EmptyInputError("entropy of an empty region");
    }
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    if (!(range > 0.0)) {
        return 0.0;
    }

    std::vector<std::size_t> hist(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        auto b = static_cast<long long>(std::floor((v - lo) / range * bins));
        b = std::clamp<long long>(b, 0, bins - 1);
        ++hist[static_cast<std::size_t>(b)];
    }

    const double n = static_cast<double>(values.size());
    double h = 0.0;
    for (std::size_t c : hist) {
        if (c > 0) {
            const double p = static_cast<double>(c) / n;
            h -= p * std::log(p);
        }
    }
    return std::clamp(h / std::log(static_cast<double>(bins)), 0.0, 1.0);
}

double normalized_entropy(const ScalarMap& map, const BBox& region, int bins)
{
    require_in_bounds(region, map.width(), map.height());
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(region.area()));
    for (int y = region.y0; y < region.y1; ++y) {
        for (int x = region.x0; x < region.x1; ++x) {
            values.push_back(map(x, y));
        }
    }
    return normalized_entropy(values, bins);
}

double normalized_entropy(const ScalarMap& map, const Mask& mask, int bins)
{
    if (mask.width() != map.width() || mask.height() != map.height()) {
        throw BoundsError("mask and map dimensions differ");
    }
    std::vector<double> values;
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) {
            if (mask.contains(x, y)) {
                values.push_back(map(x, y));
            }
        }
    }
    if (values.empty()) {
        throw EmptyMaskError("entropy over an empty mask");
    }
    return normalized_entropy(values, bins);
}

// ---------------------------------------------------------------------------
// Order statistics

PercentileTable::PercentileTable(const ScalarMap& map) : sorted_(map.values().begin(), map.values().end())
{
    if (sorted_.empty()) {
        throw EmptyInputError("percentile of an empty map");
    }
    std::sort(sorted_.begin(), sorted_.end());
}

double PercentileTable::threshold(double p) const
{
    if (!(p >= 0.0 && p <= 100.0)) {
        throw ConfigError(fmt::format("percentile {} outside [0,100]", p));
    }
    const double n = static_cast<double>(sorted_.size());
    // p * n first keeps integer percentiles exact.
    auto rank = static_cast<std::size_t>(std::ceil(p * n / 100.0));
    rank = std::clamp<std::size_t>(rank, 1, sorted_.size());
    return sorted_[rank - 1];
}

double PercentileTable::rank(double value) const
{
    const auto lo = std::lower_bound(sorted_.begin(), sorted_.end(), value);
    const auto hi = std::upper_bound(lo, sorted_.end(), value);
    const double below = static_cast<double>(lo - sorted_.begin());
    const double equal = static_cast<double>(hi - lo);
    return (below + 0.5 * equal) / static_cast<double>(sorted_.size());
}

double percentile_threshold(const ScalarMap& map, double p) { return PercentileTable(map).threshold(p); }

double percentile_rank(const ScalarMap& map, double value) { return PercentileTable(map).rank(value); }

DensityStats density_stats(const ScalarMap& map)
{
    if (map.empty()) {
        throw EmptyInputError("statistics of an empty map");
    }
    const auto vals = map.values();
    const double n = static_cast<double>(vals.size());
    // Shifted by the first value so a constant map gives exactly sd = 0.
    const double shift = vals.front();
    double offset = 0.0;
    for (double v : vals) {
        offset += v - shift;
    }
    offset /= n;
    const double mean = shift + offset;
    double var = 0.0;
    for (double v : vals) {
        var += (v - shift - offset) * (v - shift - offset);
    }
    var /= n;
    const double sd = std::sqrt(var);
    return DensityStats{mean, sd, mean + 2.0 * sd};
}

// ---------------------------------------------------------------------------
// Peaks

std::vector<Point> local_peaks(const ScalarMap& map, double threshold, int window)
{
    if (window < 3 || window % 2 == 0) {
        throw ConfigError(fmt::format("peak window must be odd and >= 3, got {}", window));
    }
    const int half = window / 2;
    const int w = map.width();
    const int h = map.height();

    std::vector<Point> peaks;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = map(x, y);
            if (!(v >= threshold)) {
                continue;
            }
            bool dominated = false;
            bool has_lower = false;
            const int ya = std::max(0, y - half), yb = std::min(h - 1, y + half);
            const int xa = std::max(0, x - half), xb = std::min(w - 1, x + half);
            for (int ny = ya; ny <= yb && !dominated; ++ny) {
                for (int nx = xa; nx <= xb; ++nx) {
                    if (nx == x && ny == y) {
                        continue;
                    }
                    const double u = map(nx, ny);
                    if (u > v) {
                        dominated = true;
                        break;
                    }
                    if (u == v) {
                        // Equal neighbour earlier in row-major order owns the tie.
                        if (ny < y || (ny == y && nx < x)) {
                            dominated = true;
                            break;
                        }
                    } else {
                        has_lower = true;
                    }
                }
            }
            if (!dominated && has_lower) {
                peaks.push_back({x, y});
            }
        }
    }
    std::stable_sort(peaks.begin(), peaks.end(),
                     [&](const Point& a, const Point& b) { return map(a.x, a.y) > map(b.x, b.y); });
    return peaks;
}

double roi_count(const ScalarMap& density, const BBox& box)
{
    require_in_bounds(box, density.width(), density.height());
    double total = 0.0;
    for (int y = box.y0; y < box.y1; ++y) {
        for (int x = box.x0; x < box.x1; ++x) {
            total += density(x, y);
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// KDE

namespace {

double quantile_linear(const std::vector<double>& sorted, double q)
{
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

constexpr double kBandwidthFloor = 1e-3;
constexpr int kModeGridPoints = 512;
constexpr int kGoldenIterations = 20;

} // namespace

double silverman_bandwidth(std::span<const double> samples)
{
    if (samples.empty()) {
        throw EmptyInputError("bandwidth of an empty sample");
    }
    const std::size_t n = samples.size();
    double spread = 0.0;
    if (n >= 2) {
        double mean = 0.0;
        for (double s : samples) {
            mean += s;
        }
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (double s : samples) {
            ss += (s - mean) * (s - mean);
        }
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        std::vector<double> sorted(samples.begin(), samples.end());
        std::sort(sorted.begin(), sorted.end());
        const double iqr = quantile_linear(sorted, 0.75) - quantile_linear(sorted, 0.25);
        spread = std::min(sd, iqr / 1.34);
    }
    const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
    return std::max(h, kBandwidthFloor);
}

double KdeEstimate::density(double x) const
{
    double acc = 0.0;
    for (double s : samples) {
        const double z = (x - s) / bandwidth;
        acc += std::exp(-0.5 * z * z);
    }
    return acc / (static_cast<double>(samples.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
}

KdeEstimate kde_fit(std::span<const double> samples)
{
    if (samples.empty()) {
        throw EmptyInputError("kde_fit needs at least one sample");
    }
    KdeEstimate est;
    est.samples.assign(samples.begin(), samples.end());
    est.bandwidth = silverman_bandwidth(samples);

    const auto [mn_it, mx_it] = std::minmax_element(samples.begin(), samples.end());
    const double mn = *mn_it, mx = *mx_it;
    const double lo = mn - 3.0 * est.bandwidth;
    const double hi = mx + 3.0 * est.bandwidth;
    const double step = (hi - lo) / (kModeGridPoints - 1);

    int best = 0;
    double best_val = -1.0;
    for (int i = 0; i < kModeGridPoints; ++i) {
        const double v = est.density(lo + step * i);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }

    // Golden-section maximisation over the two cells around the winner.
    double a = lo + step * std::max(best - 1, 0);
    double b = lo + step * std::min(best + 1, kModeGridPoints - 1);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = est.density(c), fd = est.density(d);
    for (int it = 0; it < kGoldenIterations; ++it) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = est.density(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = est.density(d);
        }
    }
    // A Gaussian mixture's mode cannot leave the sample hull.
    est.mode = std::clamp(0.5 * (a + b), mn, mx);
    return est;
}

double cosine(const Descriptor& a, const Descriptor& b)
{
    if (a.size() != b.size()) {
        throw ContractError(fmt::format("descriptor lengths differ ({} vs {})", a.size(), b.size()));
    }
    if (std::abs(a.norm() - 1.0) > 1e-6 || std::abs(b.norm() - 1.0) > 1e-6) {
        throw ContractError("cosine requires unit-norm descriptors");
    }
    double dot = 0.0;
    const auto va = a.values(), vb = b.values();
    for (std::size_t i = 0; i < va.size(); ++i) {
        dot += va[i] * vb[i];
    }
    return std::clamp(dot, -1.0, 1.0);
}

} // namespace zes
