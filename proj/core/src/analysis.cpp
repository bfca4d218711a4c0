#include "routemix/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "routemix/error.hpp"

namespace routemix::analysis {

double gini(std::span<const double> values) {
  if (values.empty()) throw ValidationError({"gini: empty input"});
  std::vector<double> x(values.begin(), values.end());
  for (double v : x)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError({"gini: values must be finite and >= 0"});
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double total = 0.0, weighted = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    total += x[i];
    weighted += (2.0 * static_cast<double>(i + 1) - n - 1.0) * x[i];
  }
  if (total <= 0.0) throw ValidationError({"gini: all values are zero"});
  return weighted / (n * total);
}

std::vector<CcdfPoint> ccdf(std::span<const double> values) {
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  std::vector<CcdfPoint> out;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    if (i == 0 || x[i] != x[i - 1]) out.push_back({x[i], static_cast<double>(x.size() - i) / n});
  return out;
}

void Histogram::validate() const {
  std::vector<std::string> issues;
  if (edges.size() < 2 || edges.size() != mass.size() + 1) issues.push_back("histogram: need bins + 1 edges");
  for (std::size_t k = 1; k < edges.size(); ++k)
    if (!(edges[k] > edges[k - 1])) {
      issues.push_back("histogram: edges must increase strictly");
      break;
    }
  double s = 0.0;
  for (double m : mass) {
    if (!(m >= 0.0)) issues.push_back("histogram: negative mass");
    s += m;
  }
  if (std::abs(s - 1.0) > 1e-12) issues.push_back("histogram: masses do not sum to 1");
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

std::vector<double> equal_width_edges(double lo, double hi, std::size_t bins) {
  if (bins == 0 || !(hi > lo)) throw ValidationError({"equal_width_edges: need bins > 0 and hi > lo"});
  std::vector<double> e(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) e[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(bins);
  e.back() = hi;
  return e;
}

Histogram histogram_from_weights(std::vector<double> edges, std::vector<double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw ValidationError({"histogram: no mass"});
  for (double& w : weights) w /= total;
  Histogram h{std::move(edges), std::move(weights)};
  h.validate();
  return h;
}

Histogram make_histogram(std::span<const double> values, std::span<const double> edges) {
  if (values.empty()) throw ValidationError({"histogram: empty sample"});
  if (edges.size() < 2) throw ValidationError({"histogram: need at least two edges"});
  std::vector<double> counts(edges.size() - 1, 0.0);
  for (double v : values) {
    if (!(v >= edges.front() && v <= edges.back())) throw ValidationError({"histogram: value outside the bin edges"});
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    std::size_t bin = static_cast<std::size_t>(it - edges.begin()) - 1;
    if (bin >= counts.size()) bin = counts.size() - 1;
    counts[bin] += 1.0;
  }
  return histogram_from_weights({edges.begin(), edges.end()}, std::move(counts));
}

namespace {
void require_same_bins(const Histogram& p, const Histogram& q, const char* what) {
  if (p.edges != q.edges || p.mass.size() != q.mass.size())
    throw ValidationError({std::string(what) + ": histograms use different bins"});
}
}  // namespace

double kl_divergence(const Histogram& p, const Histogram& q) {
  require_same_bins(p, q, "kl_divergence");
  double d = 0.0;
  for (std::size_t k = 0; k < p.mass.size(); ++k) {
    if (p.mass[k] == 0.0) continue;
    if (q.mass[k] == 0.0) return std::numeric_limits<double>::infinity();
    d += p.mass[k] * std::log2(p.mass[k] / q.mass[k]);
  }
  return std::max(0.0, d);
}

double js_divergence(const Histogram& p, const Histogram& q) {
  require_same_bins(p, q, "js_divergence");
  double d = 0.0;
  for (std::size_t k = 0; k < p.mass.size(); ++k) {
    const double a = p.mass[k], b = q.mass[k];
    const double m = 0.5 * (a + b);
    // Summing the two terms of a bin first keeps JS(p, q) == JS(q, p) bit for bit.
    const double ta = a > 0.0 ? a * std::log2(a / m) : 0.0;
    const double tb = b > 0.0 ? b * std::log2(b / m) : 0.0;
    d += 0.5 * (ta + tb);
  }
  return std::clamp(d, 0.0, 1.0);
}

// Both work on data shifted by the first value, so constant input gives an
// exact mean and a zero spread.
double mean(std::span<const double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double k = v.front();
  double s = 0.0;
  for (double x : v) s += x - k;
  return k + s / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double k = v.front();
  const double n = static_cast<double>(v.size());
  double s = 0.0, ss = 0.0;
  for (double x : v) {
    s += x - k;
    ss += (x - k) * (x - k);
  }
  return std::sqrt(std::max(0.0, (ss - s * s / n) / (n - 1.0)));
}

double scott_bandwidth(std::span<const double> values) {
  const double sd = sample_std(values);
  if (!(sd > 0.0)) return 1.0;
  return 1.06 * sd * std::pow(static_cast<double>(values.size()), -0.2);
}

double kde_at(std::span<const double> values, double h, double x) {
  const double norm = 1.0 / (static_cast<double>(values.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  double s = 0.0;
  for (double v : values) {
    const double z = (x - v) / h;
    s += std::exp(-0.5 * z * z);
  }
  return s * norm;
}

KdeCurve kde(std::span<const double> values, std::optional<double> bandwidth, std::size_t points) {
  if (values.empty()) throw ValidationError({"kde: empty sample"});
  if (points < 2) throw ValidationError({"kde: need at least two grid points"});
  KdeCurve c;
  c.bandwidth = bandwidth.value_or(scott_bandwidth(values));
  if (!(c.bandwidth > 0.0)) throw ValidationError({"kde: bandwidth must be > 0"});
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it - 4.0 * c.bandwidth, hi = *hi_it + 4.0 * c.bandwidth;
  c.x.resize(points);
  c.density.resize(points);
  for (std::size_t k = 0; k < points; ++k) {
    c.x[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    c.density[k] = kde_at(values, c.bandwidth, c.x[k]);
  }
  return c;
}

TravelTimeComparison travel_time_comparison(std::span<const double> sim, std::span<const double> real,
                                            std::size_t bins) {
  if (sim.empty() || real.empty()) throw ValidationError({"travel_time_comparison: empty sample"});
  double lo = std::min(*std::min_element(sim.begin(), sim.end()), *std::min_element(real.begin(), real.end()));
  double hi = std::max(*std::max_element(sim.begin(), sim.end()), *std::max_element(real.begin(), real.end()));
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const auto edges = equal_width_edges(lo, hi, bins);
  TravelTimeComparison out;
  out.js = js_divergence(make_histogram(sim, edges), make_histogram(real, edges));
  out.abs_mean_diff = std::abs(mean(sim) - mean(real));
  return out;
}

namespace {
std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}
}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ValidationError({"spearman: need two equal-length samples"});
  const auto ra = ranks(a), rb = ranks(b);
  const double ma = mean(ra), mb = mean(rb);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace routemix::analysis
