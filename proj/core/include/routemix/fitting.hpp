#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace routemix::analysis {

enum class Model { power_law, truncated_power_law, lognormal, exponential, stretched_exponential };
inline constexpr std::array kAllModels{Model::power_law, Model::truncated_power_law, Model::lognormal,
                                       Model::exponential, Model::stretched_exponential};

std::string_view to_string(Model m) noexcept;
Model model_from_string(std::string_view s);

/// Maximum-likelihood fit of one family on the tail x >= x_min. Parameters
/// that do not belong to the family are NaN.
///
///   power_law              p ~ x^-alpha                       alpha > 1
///   truncated_power_law    p ~ x^-alpha exp(-lambda x)        lambda >= 0
///   lognormal              p ~ exp(-(ln x - mu)^2 / 2 sigma^2) / x
///   exponential            p ~ exp(-lambda x)
///   stretched_exponential  p ~ x^(beta-1) exp(-lambda x^beta)
struct FitResult {
  Model model = Model::power_law;
  double x_min = 0.0;
  std::size_t n = 0;
  double loglik = 0.0;
  double alpha = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
  double beta = 0.0;
  int iterations = 0;
};

/// Values with x >= x_min. Throws ValidationError when x_min <= 0 or the tail
/// has fewer than `min_n` values or no spread.
std::vector<double> tail(std::span<const double> values, double x_min, std::size_t min_n = 2);

FitResult fit_power_law(std::span<const double> values, double x_min);
FitResult fit_exponential(std::span<const double> values, double x_min);

/// Concave MLE in (alpha, lambda >= 0) by projected Newton. The normalizer and
/// its moments are integrated numerically on data scaled by x_min; iteration
/// stops when the per-sample projected gradient norm drops below `grad_tol`.
/// Throws ConvergenceError when that does not happen, ValidationError for a
/// tail shorter than 100 values or without spread.
FitResult fit_truncated_powerlaw(std::span<const double> values, double x_min, double grad_tol = 1e-8);

/// Nelder-Mead with three starts.
FitResult fit_lognormal(std::span<const double> values, double x_min);
FitResult fit_stretched_exponential(std::span<const double> values, double x_min);

std::vector<FitResult> fit_all_models(std::span<const double> values, double x_min);

/// Log density of each tail value under the fitted model.
std::vector<double> pointwise_loglik(const FitResult& fit, std::span<const double> values);

struct Comparison {
  std::size_t a = 0, b = 0;  // indices into the fit list
  double R = 0.0;             // sum of log-likelihood differences, > 0 favours a
  double z = 0.0;             // normalized ratio
  double p = 1.0;             // two-sided
};

struct Selection {
  std::vector<FitResult> fits;
  std::vector<Comparison> comparisons;  // every unordered pair once, a < b
  std::vector<int> wins;
  std::size_t best = 0;
  Model winner() const { return fits.at(best).model; }
};

/// Pairwise Vuong tests on the tail of `values`. A model wins a comparison when
/// the ratio favours it with p < `alpha_level`; the best model has the most
/// wins, ties broken by the higher log-likelihood.
Selection select_best(std::vector<FitResult> fits, std::span<const double> values, double alpha_level = 0.05);

struct XminScan {
  double x_min = 0.0;
  double ks = 0.0;
  double alpha = 0.0;
};

/// Clauset-style choice of x_min minimizing the KS distance of a power-law fit,
/// considering unique values that leave at least `min_tail` points.
XminScan scan_xmin(std::span<const double> values, std::size_t min_tail = 50);

/// Smallest positive value.
double default_xmin(std::span<const double> values);


std::string fit_report_json(const Selection& sel);

}  // namespace routemix::analysis
