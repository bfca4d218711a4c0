#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace routemix::analysis {

/// Gini index via the sorted identity sum_i (2i - n - 1) x_(i) / (n * sum x).
/// Throws ValidationError on empty input, negative values, or an all-zero vector.
double gini(std::span<const double> values);

struct CcdfPoint {
  double x = 0.0;
  double p = 0.0;  // P(X >= x)
};

/// Empirical survival function on the sorted unique values.
std::vector<CcdfPoint> ccdf(std::span<const double> values);

/// Bin edges plus normalized masses. A value equal to the last edge falls in
/// the last bin.
struct Histogram {
  std::vector<double> edges;
  std::vector<double> mass;

  std::size_t bins() const noexcept { return mass.size(); }
  /// Throws ValidationError unless edges increase strictly and mass is a
  /// distribution (nonnegative, sums to 1 within 1e-12).
  void validate() const;
};

std::vector<double> equal_width_edges(double lo, double hi, std::size_t bins);
/// Throws ValidationError on empty input or values outside the edges.
Histogram make_histogram(std::span<const double> values, std::span<const double> edges);
/// Normalizes raw nonnegative weights onto the given edges.
Histogram histogram_from_weights(std::vector<double> edges, std::vector<double> weights);

/// Base-2 KL divergence. Returns +infinity when Q(x) = 0 < P(x).
double kl_divergence(const Histogram& p, const Histogram& q);
/// Base-2 Jensen-Shannon divergence, in [0, 1].
double js_divergence(const Histogram& p, const Histogram& q);

struct KdeCurve {
  std::vector<double> x;
  std::vector<double> density;
  double bandwidth = 0.0;
};

/// Scott's rule: 1.06 * sd * n^(-1/5). Falls back to 1 for zero spread.
double scott_bandwidth(std::span<const double> values);
/// Gaussian KDE evaluated at `points` equally spaced x from min - 4h to max + 4h.
KdeCurve kde(std::span<const double> values, std::optional<double> bandwidth = std::nullopt,
             std::size_t points = 512);
double kde_at(std::span<const double> values, double bandwidth, double x);

struct TravelTimeComparison {
  double js = 0.0;
  double abs_mean_diff = 0.0;  // s
};

/// Histograms both samples on `bins` equal-width bins over the pooled range.
TravelTimeComparison travel_time_comparison(std::span<const double> sim, std::span<const double> real,
                                            std::size_t bins = 60);

double mean(std::span<const double> v);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_std(std::span<const double> v);
/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace routemix::analysis
