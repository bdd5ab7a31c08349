#pragma once

#include "zes/core_types.hpp"

#include <span>
#include <vector>

namespace zes {

// Shannon entropy of a value histogram divided by ln(bins). Bins are
// equal-width over the values' own [min, max]; a constant input occupies a
// single bin. Result clamped to [0, 1].
double normalized_entropy(std::span<const double> values, int bins);
double normalized_entropy(const ScalarMap& map, const BBox& region, int bins);
double normalized_entropy(const ScalarMap& map, const Mask& mask, int bins);

/// Sorted copy of a map's values, answering order-statistic queries in
/// O(log N) after one O(N log N) build.
class PercentileTable {
public:
    explicit PercentileTable(const ScalarMap& map);

    // Nearest rank: the ceil(p/100 * N)-th smallest value, p = 0 -> minimum.
    double threshold(double p) const;
    // Mid-rank: fraction strictly below plus half the fraction equal.
    double rank(double value) const;

private:
    std::vector<double> sorted_;
};

double percentile_threshold(const ScalarMap& map, double p);
double percentile_rank(const ScalarMap& map, double value);

struct DensityStats {
    double mean = 0.0;
    double stddev = 0.0;
    double threshold = 0.0; // mean + 2 * stddev
};

// Population statistics over every pixel.
DensityStats density_stats(const ScalarMap& map);

/// Local maxima at or above `threshold`. A pixel qualifies when, inside the
/// centred window (clipped at the map border), every other value is lower or
/// is an equal value that comes later in row-major order, and at least one
/// value is strictly lower. Flat plateaus therefore yield nothing.
/// Sorted by descending value, row-major order among ties.
std::vector<Point> local_peaks(const ScalarMap& map, double threshold, int window);

// Sum of map values over the box pixels (row-major accumulation).
double roi_count(const ScalarMap& density, const BBox& box);

struct KdeEstimate {
    std::vector<double> samples;
    double bandwidth = 0.0;
    double mode = 0.0;

    // Gaussian KDE evaluated at x.
    double density(double x) const;
};

/// Gaussian-kernel KDE with Silverman's bandwidth (floored at 1e-3). The mode
/// is the argmax of a 512-point grid over [min - 3h, max + 3h], refined with
/// golden-section search inside the neighbouring grid cells.
KdeEstimate kde_fit(std::span<const double> samples);

double silverman_bandwidth(std::span<const double> samples);

// Dot product of two unit descriptors; ContractError when either norm is
// more than 1e-6 away from one.
double cosine(const Descriptor& a, const Descriptor& b);

} // namespace zes
