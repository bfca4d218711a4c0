#include "routemix/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <nlohmann/json.hpp>

#include "routemix/error.hpp"

namespace routemix::analysis {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

FitResult blank(Model m, double x_min, std::size_t n) {
  FitResult f;
  f.model = m;
  f.x_min = x_min;
  f.n = n;
  f.alpha = f.lambda = f.mu = f.sigma = f.beta = kNaN;
  return f;
}

/// ln(y) for y = x / x_min over the tail.
std::vector<double> log_scaled(std::span<const double> tail_values, double x_min) {
  std::vector<double> u(tail_values.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::log(tail_values[i] / x_min);
  return u;
}

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// ---------------------------------------------------------------------------
// Nelder-Mead

struct Simplex {
  std::vector<double> x;
  double f = kInf;
};

std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> start,
                                double step, double& best_f, int& iterations, int max_iter = 4000) {
  const std::size_t n = start.size();
  std::vector<Simplex> s(n + 1);
  s[0] = {start, f(start)};
  for (std::size_t k = 0; k < n; ++k) {
    auto x = start;
    x[k] += step;
    s[k + 1] = {x, f(x)};
  }
  auto eval = [&](std::vector<double> x) { return Simplex{x, f(x)}; };
  int it = 0;
  for (; it < max_iter; ++it) {
    std::sort(s.begin(), s.end(), [](const Simplex& a, const Simplex& b) { return a.f < b.f; });
    const double spread = std::abs(s[n].f - s[0].f);
    if (std::isfinite(s[0].f) && spread <= 1e-13 * (std::abs(s[0].f) + 1e-13)) break;
    std::vector<double> c(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) c[k] += s[i].x[k] / static_cast<double>(n);
    auto along = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t k = 0; k < n; ++k) x[k] = c[k] + t * (s[n].x[k] - c[k]);
      return eval(x);
    };
    auto r = along(-1.0);
    if (r.f < s[0].f) {
      auto e = along(-2.0);
      s[n] = e.f < r.f ? e : r;
    } else if (r.f < s[n - 1].f) {
      s[n] = r;
    } else {
      auto ct = r.f < s[n].f ? along(-0.5) : along(0.5);
      if (ct.f < std::min(r.f, s[n].f)) {
        s[n] = ct;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          std::vector<double> x(n);
          for (std::size_t k = 0; k < n; ++k) x[k] = s[0].x[k] + 0.5 * (s[i].x[k] - s[0].x[k]);
          s[i] = eval(x);
        }
      }
    }
  }
  std::sort(s.begin(), s.end(), [](const Simplex& a, const Simplex& b) { return a.f < b.f; });
  best_f = s[0].f;
  iterations = it;
  return s[0].x;
}

// ---------------------------------------------------------------------------
// Truncated power law on y = x / x_min >= 1 with scaled rate ls = lambda * x_min.
// Substituting t = ln y, Z = exp(-ls) * integral_0^inf exp((1-a) t - ls (e^t - 1)) dt.

struct TplMoments {
  bool ok = false;
  double log_z = kNaN;
  double et = kNaN, ey = kNaN;     // E[ln y], E[y]
  double vtt = kNaN, vty = kNaN, vyy = kNaN;
};

TplMoments tpl_moments(double a, double ls) {
  TplMoments m;
  if (ls < 0.0 || !std::isfinite(a) || !std::isfinite(ls)) return m;
  if (ls == 0.0) {
    if (!(a > 1.0)) return m;
    const double k = a - 1.0;
    m.ok = true;
    m.log_z = -std::log(k);
    m.et = 1.0 / k;
    m.vtt = 1.0 / (k * k);
    m.ey = a > 2.0 ? k / (a - 2.0) : kInf;
    if (a > 3.0) {
      const double ey2 = k / (a - 3.0);
      m.vyy = ey2 - m.ey * m.ey;
      // E[t y] = k / (a-2)^2
      m.vty = k / ((a - 2.0) * (a - 2.0)) - m.et * m.ey;
    } else {
      m.vyy = m.vty = kInf;
    }
    return m;
  }

  auto h = [a, ls](double t) { return (1.0 - a) * t - ls * std::expm1(t); };
  double peak = 0.0;
  if (a < 1.0) peak = std::max(0.0, std::log((1.0 - a) / ls));
  const double shift = h(peak);
  const double split = std::max(peak, std::log(1.0 / ls)) + 1.0;

  static thread_local boost::math::quadrature::tanh_sinh<double> finite;
  static thread_local boost::math::quadrature::exp_sinh<double> infinite;
  auto integrate = [&](auto&& g) {
    auto w = [&](double t) {
      const double e = h(t) - shift;
      return e < -745.0 ? 0.0 : g(t) * std::exp(e);
    };
    double err = 0.0;
    const double lo = finite.integrate(w, 0.0, split, 1e-13, &err);
    const double hi = infinite.integrate(w, split, kInf, 1e-13, &err);
    return lo + hi;
  };

  const double i0 = integrate([](double) { return 1.0; });
  if (!(i0 > 0.0) || !std::isfinite(i0)) return m;
  m.et = integrate([](double t) { return t; }) / i0;
  m.ey = integrate([](double t) { return std::exp(t); }) / i0;
  const double et = m.et, ey = m.ey;
  m.vtt = integrate([et](double t) { return (t - et) * (t - et); }) / i0;
  m.vty = integrate([et, ey](double t) { return (t - et) * (std::exp(t) - ey); }) / i0;
  m.vyy = integrate([ey](double t) {
            const double d = std::exp(t) - ey;
            return d * d;
          }) / i0;
  m.log_z = -ls + shift + std::log(i0);
  m.ok = std::isfinite(m.et) && std::isfinite(m.ey);
  return m;
}

double tpl_mean_loglik(double a, double ls, double mean_t, double mean_y, const TplMoments& m) {
  return -a * mean_t - ls * mean_y - m.log_z;
}

// Lognormal on u = ln y >= 0.
double lognormal_mean_loglik(std::span<const double> u, double mu, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(mu)) return -kInf;
  const double surv = 0.5 * boost::math::erfc(-mu / (sigma * std::numbers::sqrt2));
  if (!(surv > 0.0)) return -kInf;
  double s = 0.0;
  for (double v : u) {
    const double z = (v - mu) / sigma;
    s += -0.5 * z * z - v;
  }
  const double n = static_cast<double>(u.size());
  return s / n - std::log(sigma * std::sqrt(2.0 * std::numbers::pi)) - std::log(surv);
}

// Stretched exponential on y >= 1.
double stretched_mean_loglik(std::span<const double> u, double ls, double beta) {
  if (!(ls > 0.0) || !(beta > 0.0)) return -kInf;
  double s = 0.0;
  for (double v : u) s += (beta - 1.0) * v - ls * std::expm1(beta * v);
  return std::log(beta * ls) + s / static_cast<double>(u.size());
}

}  // namespace

std::string_view to_string(Model m) noexcept {
  switch (m) {
    case Model::power_law: return "power_law";
    case Model::truncated_power_law: return "truncated_power_law";
    case Model::lognormal: return "lognormal";
    case Model::exponential: return "exponential";
    case Model::stretched_exponential: return "stretched_exponential";
  }
  return "?";
}

Model model_from_string(std::string_view s) {
  for (auto m : kAllModels)
    if (to_string(m) == s) return m;
  throw ParseError("model", "unknown model '" + std::string(s) + "'");
}

std::vector<double> tail(std::span<const double> values, double x_min, std::size_t min_n) {
  if (!(x_min > 0.0) || !std::isfinite(x_min)) throw ValidationError({"fit: x_min must be > 0"});
  std::vector<double> t;
  for (double v : values)
    if (v >= x_min) t.push_back(v);
  if (t.size() < min_n)
    throw ValidationError({"fit: tail has " + std::to_string(t.size()) + " values, need " + std::to_string(min_n)});
  const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
  if (*lo == *hi) throw ValidationError({"fit: tail values are all equal"});
  return t;
}

FitResult fit_power_law(std::span<const double> values, double x_min) {
  const auto t = tail(values, x_min);
  const auto u = log_scaled(t, x_min);
  const double n = static_cast<double>(t.size()), su = sum(u);
  auto f = blank(Model::power_law, x_min, t.size());
  f.alpha = 1.0 + n / su;
  f.loglik = n * std::log((f.alpha - 1.0) / x_min) - f.alpha * su;
  return f;
}

FitResult fit_exponential(std::span<const double> values, double x_min) {
  const auto t = tail(values, x_min);
  const double n = static_cast<double>(t.size());
  double excess = 0.0;
  for (double v : t) excess += v - x_min;
  auto f = blank(Model::exponential, x_min, t.size());
  f.lambda = n / excess;
  f.loglik = n * std::log(f.lambda) - f.lambda * excess;
  return f;
}

FitResult fit_truncated_powerlaw(std::span<const double> values, double x_min, double grad_tol) {
  const auto t = tail(values, x_min, 100);
  const auto u = log_scaled(t, x_min);
  const double n = static_cast<double>(t.size());
  const double mean_t = sum(u) / n;
  double mean_y = 0.0;
  for (double v : t) mean_y += v / x_min;
  mean_y /= n;

  double a = 1.0 + 1.0 / mean_t;
  double ls = 0.1 / mean_y;
  auto m = tpl_moments(a, ls);
  double ll = tpl_mean_loglik(a, ls, mean_t, mean_y, m);

  int it = 0;
  bool converged = false;
  for (; it < 300; ++it) {
    const double ga = m.et - mean_t;
    const double gl = m.ey - mean_y;
    const bool at_bound = ls == 0.0;
    const bool bound_active = at_bound && gl <= 0.0;
    const double pg = bound_active ? std::abs(ga) : std::hypot(ga, gl);
    if (pg < grad_tol) {
      converged = true;
      break;
    }

    double da = 0.0, dl = 0.0;
    if (bound_active) {
      da = ga / m.vtt;
    } else if (at_bound && !std::isfinite(m.vyy)) {
      dl = 1.0 / mean_y;
    } else {
      const double det = m.vtt * m.vyy - m.vty * m.vty;
      if (det > 0.0 && std::isfinite(det)) {
        da = (m.vyy * ga - m.vty * gl) / det;
        dl = (m.vtt * gl - m.vty * ga) / det;
      } else {
        da = ga;
        dl = gl;
      }
    }

    bool moved = false;
    double s = 1.0;
    for (int k = 0; k < 80; ++k, s *= 0.5) {
      const double a2 = a + s * da;
      const double l2 = std::max(0.0, ls + s * dl);
      if (a2 == a && l2 == ls) break;
      auto m2 = tpl_moments(a2, l2);
      if (!m2.ok && !(l2 == 0.0 && a2 > 1.0)) continue;
      if (!std::isfinite(m2.log_z)) continue;
      const double ll2 = tpl_mean_loglik(a2, l2, mean_t, mean_y, m2);
      const double slack = k == 0 ? 1e-14 * std::max(1.0, std::abs(ll)) : 0.0;
      if (ll2 > ll - slack) {
        a = a2;
        ls = l2;
        m = m2;
        ll = ll2;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  if (!converged) {
    const double ga = m.et - mean_t, gl = m.ey - mean_y;
    throw ConvergenceError("truncated power-law fit did not converge after " + std::to_string(it) +
                           " iterations (alpha=" + std::to_string(a) + ", gradient=(" + std::to_string(ga) + ", " +
                           std::to_string(gl) + "))");
  }
  auto f = blank(Model::truncated_power_law, x_min, t.size());
  f.alpha = a;
  f.lambda = ls / x_min;
  f.loglik = n * (ll - std::log(x_min));
  f.iterations = it;
  return f;
}

FitResult fit_lognormal(std::span<const double> values, double x_min) {
  const auto t = tail(values, x_min);
  const auto u = log_scaled(t, x_min);
  const double n = static_cast<double>(u.size());
  const double mu0 = sum(u) / n;
  double var = 0.0;
  for (double v : u) var += (v - mu0) * (v - mu0);
  const double sd0 = std::max(std::sqrt(var / n), 1e-3);

  auto objective = [&](const std::vector<double>& p) {
    const double ll = lognormal_mean_loglik(u, p[0], std::exp(p[1]));
    return std::isfinite(ll) ? -ll : 1e300;
  };
  const std::vector<std::vector<double>> starts{
      {mu0, std::log(sd0)}, {0.0, std::log(2.0 * sd0)}, {mu0 - 2.0 * sd0, std::log(1.5 * sd0)}};
  double best = kInf;
  std::vector<double> best_p;
  int total_it = 0;
  for (const auto& s : starts) {
    double fv = kInf;
    int it = 0;
    auto p = nelder_mead(objective, s, 0.5, fv, it);
    total_it += it;
    if (fv < best) {
      best = fv;
      best_p = p;
    }
  }
  if (!std::isfinite(best) || best >= 1e300) throw ConvergenceError("lognormal fit found no finite likelihood");
  auto f = blank(Model::lognormal, x_min, t.size());
  f.mu = best_p[0] + std::log(x_min);
  f.sigma = std::exp(best_p[1]);
  f.loglik = n * (-best - std::log(x_min));
  f.iterations = total_it;
  return f;
}

FitResult fit_stretched_exponential(std::span<const double> values, double x_min) {
  const auto t = tail(values, x_min);
  const auto u = log_scaled(t, x_min);
  const double n = static_cast<double>(u.size());

  auto profile_rate = [&](double beta) {
    double s = 0.0;
    for (double v : u) s += std::expm1(beta * v);
    return s > 0.0 ? n / s : 1.0;
  };
  auto objective = [&](const std::vector<double>& p) {
    const double ll = stretched_mean_loglik(u, std::exp(p[0]), std::exp(p[1]));
    return std::isfinite(ll) ? -ll : 1e300;
  };
  double best = kInf;
  std::vector<double> best_p;
  int total_it = 0;
  for (double beta : {1.0, 0.5, 0.2}) {
    double fv = kInf;
    int it = 0;
    auto p = nelder_mead(objective, {std::log(profile_rate(beta)), std::log(beta)}, 0.5, fv, it);
    total_it += it;
    if (fv < best) {
      best = fv;
      best_p = p;
    }
  }
  if (!std::isfinite(best) || best >= 1e300)
    throw ConvergenceError("stretched exponential fit found no finite likelihood");
  auto f = blank(Model::stretched_exponential, x_min, t.size());
  f.beta = std::exp(best_p[1]);
  f.lambda = std::exp(best_p[0]) * std::pow(x_min, -f.beta);
  f.loglik = n * (-best - std::log(x_min));
  f.iterations = total_it;
  return f;
}

std::vector<FitResult> fit_all_models(std::span<const double> values, double x_min) {
  return {fit_power_law(values, x_min), fit_truncated_powerlaw(values, x_min), fit_lognormal(values, x_min),
          fit_exponential(values, x_min), fit_stretched_exponential(values, x_min)};
}

std::vector<double> pointwise_loglik(const FitResult& fit, std::span<const double> values) {
  const double xm = fit.x_min;
  const auto t = tail(values, xm, 1);
  std::vector<double> out(t.size());
  const double lx = std::log(xm);
  switch (fit.model) {
    case Model::power_law:
      for (std::size_t i = 0; i < t.size(); ++i)
        out[i] = std::log((fit.alpha - 1.0) / xm) - fit.alpha * std::log(t[i] / xm);
      break;
    case Model::exponential:
      for (std::size_t i = 0; i < t.size(); ++i) out[i] = std::log(fit.lambda) - fit.lambda * (t[i] - xm);
      break;
    case Model::truncated_power_law: {
      const double ls = fit.lambda * xm;
      const auto m = tpl_moments(fit.alpha, ls);
      if (!std::isfinite(m.log_z)) throw ConvergenceError("truncated power-law normalizer is not finite");
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double y = t[i] / xm;
        out[i] = -fit.alpha * std::log(y) - ls * y - m.log_z - lx;
      }
      break;
    }
    case Model::lognormal: {
      const double mu = fit.mu - lx;
      const double log_surv = std::log(0.5 * boost::math::erfc(-mu / (fit.sigma * std::numbers::sqrt2)));
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double v = std::log(t[i] / xm);
        const double z = (v - mu) / fit.sigma;
        out[i] = -0.5 * z * z - v - std::log(fit.sigma * std::sqrt(2.0 * std::numbers::pi)) - log_surv - lx;
      }
      break;
    }
    case Model::stretched_exponential: {
      const double ls = fit.lambda * std::pow(xm, fit.beta);
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double v = std::log(t[i] / xm);
        out[i] = std::log(fit.beta * ls) + (fit.beta - 1.0) * v - ls * std::expm1(fit.beta * v) - lx;
      }
      break;
    }
  }
  return out;
}

Selection select_best(std::vector<FitResult> fits, std::span<const double> values, double alpha_level) {
  if (fits.empty()) throw ValidationError({"select_best: no fits"});
  const double x_min = fits.front().x_min;
  for (const auto& f : fits)
    if (f.x_min != x_min) throw ValidationError({"select_best: fits use different x_min"});
  Selection sel;
  sel.fits = std::move(fits);
  const std::size_t k = sel.fits.size();
  std::vector<std::vector<double>> ll(k);
  for (std::size_t i = 0; i < k; ++i) ll[i] = pointwise_loglik(sel.fits[i], values);
  sel.wins.assign(k, 0);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b) {
      Comparison c{a, b};
      const std::size_t n = ll[a].size();
      double r = 0.0;
      for (std::size_t i = 0; i < n; ++i) r += ll[a][i] - ll[b][i];
      const double md = r / static_cast<double>(n);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = ll[a][i] - ll[b][i] - md;
        var += d * d;
      }
      const double sd = std::sqrt(var / static_cast<double>(n));
      c.R = r;
      if (sd > 0.0) {
        c.z = r / (std::sqrt(static_cast<double>(n)) * sd);
        c.p = std::erfc(std::abs(c.z) / std::numbers::sqrt2);
      }
      if (c.p < alpha_level && r != 0.0) ++sel.wins[r > 0.0 ? a : b];
      sel.comparisons.push_back(c);
    }
  sel.best = 0;
  for (std::size_t i = 1; i < k; ++i) {
    const auto& cur = sel.fits[i];
    const auto& best = sel.fits[sel.best];
    if (sel.wins[i] > sel.wins[sel.best] || (sel.wins[i] == sel.wins[sel.best] && cur.loglik > best.loglik))
      sel.best = i;
  }
  return sel;
}

XminScan scan_xmin(std::span<const double> values, std::size_t min_tail) {
  std::vector<double> x;
  for (double v : values)
    if (v > 0.0) x.push_back(v);
  std::sort(x.begin(), x.end());
  XminScan best{kNaN, kInf, kNaN};
  for (std::size_t start = 0; start < x.size(); ++start) {
    if (start > 0 && x[start] == x[start - 1]) continue;
    const std::size_t m = x.size() - start;
    if (m < min_tail) break;
    const double xm = x[start];
    double su = 0.0;
    for (std::size_t i = start; i < x.size(); ++i) su += std::log(x[i] / xm);
    if (su <= 0.0) break;
    const double a = 1.0 + static_cast<double>(m) / su;
    double ks = 0.0;
    for (std::size_t i = start; i < x.size(); ++i) {
      const double cdf = 1.0 - std::pow(x[i] / xm, 1.0 - a);
      const double lo = static_cast<double>(i - start) / static_cast<double>(m);
      const double hi = static_cast<double>(i - start + 1) / static_cast<double>(m);
      ks = std::max({ks, std::abs(cdf - lo), std::abs(cdf - hi)});
    }
    if (ks < best.ks) best = {xm, ks, a};
  }
  if (!std::isfinite(best.ks)) throw ValidationError({"scan_xmin: not enough positive values"});
  return best;
}

double default_xmin(std::span<const double> values) {
  double m = kInf;
  for (double v : values)
    if (v > 0.0) m = std::min(m, v);
  if (!std::isfinite(m)) throw ValidationError({"default_xmin: no positive values"});
  return m;
}

std::string fit_report_json(const Selection& sel) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(); };
  nlohmann::ordered_json j;
  j["x_min"] = sel.fits.front().x_min;
  j["n"] = sel.fits.front().n;
  auto& models = j["models"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < sel.fits.size(); ++i) {
    const auto& f = sel.fits[i];
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    if (!std::isnan(f.alpha)) params["alpha"] = num(f.alpha);
    if (!std::isnan(f.lambda)) params["lambda"] = num(f.lambda);
    if (!std::isnan(f.mu)) params["mu"] = num(f.mu);
    if (!std::isnan(f.sigma)) params["sigma"] = num(f.sigma);
    if (!std::isnan(f.beta)) params["beta"] = num(f.beta);
    models.push_back({{"model", to_string(f.model)}, {"params", params}, {"loglik", num(f.loglik)},
                      {"wins", sel.wins[i]}});
  }
  auto& cmp = j["comparisons"] = nlohmann::ordered_json::array();
  for (const auto& c : sel.comparisons)
    cmp.push_back({{"a", to_string(sel.fits[c.a].model)}, {"b", to_string(sel.fits[c.b].model)}, {"R", num(c.R)},
                   {"z", num(c.z)}, {"p", num(c.p)}});
  j["winner"] = to_string(sel.winner());
  return j.dump(1) + "\n";
}

}  // namespace routemix::analysis
