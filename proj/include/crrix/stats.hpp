#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>

#include "crrix/error.hpp"
#include "crrix/matrix.hpp"
#include "crrix/random.hpp"

namespace crrix {

// ---------------------------------------------------------------------------
// Ordinary least squares

struct OlsResult {
  std::vector<double> coef;
  std::vector<double> std_err;
  double ssr = 0.0;
  std::size_t nobs = 0;
  std::size_t df_resid = 0;

  double t_stat(std::size_t i) const { return coef[i] / std_err[i]; }
};

/**
 * Least squares by Householder QR of the n x p design. Throws
 * NumericalError when a diagonal of R falls below 1e-10 times the largest
 * column norm (perfect or near-perfect collinearity).
 */
inline OlsResult ols(const Matrix& design, std::span<const double> y) {
  const std::size_t n = design.rows();
  const std::size_t p = design.cols();
  if (y.size() != n) throw UsageError("ols: response length does not match design rows");
  if (n <= p) throw DataError("ols: need more observations than regressors");

  Matrix a = design;
  std::vector<double> qty(y.begin(), y.end());
  double scale = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a(i, j) * a(i, j);
    scale = std::max(scale, std::sqrt(s));
  }
  if (scale == 0.0) throw NumericalError("ols: design matrix is zero");

  std::vector<double> v(n);
  for (std::size_t j = 0; j < p; ++j) {
    double norm = 0.0;
    for (std::size_t i = j; i < n; ++i) norm += a(i, j) * a(i, j);
    norm = std::sqrt(norm);
    if (norm <= 1e-10 * scale) throw NumericalError("ols: design matrix is rank deficient (perfect multicollinearity)");
    const double alpha = a(j, j) > 0 ? -norm : norm;
    for (std::size_t i = j; i < n; ++i) v[i] = a(i, j);
    v[j] -= alpha;
    double vnorm2 = 0.0;
    for (std::size_t i = j; i < n; ++i) vnorm2 += v[i] * v[i];
    for (std::size_t c = j; c < p; ++c) {
      double dot = 0.0;
      for (std::size_t i = j; i < n; ++i) dot += v[i] * a(i, c);
      const double f = 2.0 * dot / vnorm2;
      for (std::size_t i = j; i < n; ++i) a(i, c) -= f * v[i];
    }
    double dot = 0.0;
    for (std::size_t i = j; i < n; ++i) dot += v[i] * qty[i];
    const double f = 2.0 * dot / vnorm2;
    for (std::size_t i = j; i < n; ++i) qty[i] -= f * v[i];
    if (std::abs(a(j, j)) <= 1e-10 * scale) throw NumericalError("ols: design matrix is rank deficient (perfect multicollinearity)");
  }

  OlsResult r;
  r.nobs = n;
  r.df_resid = n - p;
  r.coef.assign(p, 0.0);
  for (std::size_t j = p; j-- > 0;) {
    double s = qty[j];
    for (std::size_t c = j + 1; c < p; ++c) s -= a(j, c) * r.coef[c];
    r.coef[j] = s / a(j, j);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double fit = 0.0;
    for (std::size_t j = 0; j < p; ++j) fit += design(i, j) * r.coef[j];
    r.ssr += (y[i] - fit) * (y[i] - fit);
  }

  // diag((R^T R)^-1) = row norms of R^-1.
  Matrix rinv(p, p);
  for (std::size_t c = 0; c < p; ++c) {
    for (std::size_t j = p; j-- > 0;) {
      double s = (j == c) ? 1.0 : 0.0;
      for (std::size_t k = j + 1; k < p; ++k) s -= a(j, k) * rinv(k, c);
      rinv(j, c) = s / a(j, j);
    }
  }
  const double sigma2 = r.ssr / static_cast<double>(r.df_resid);
  r.std_err.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    double s = 0.0;
    for (std::size_t c = 0; c < p; ++c) s += rinv(j, c) * rinv(j, c);
    r.std_err[j] = std::sqrt(sigma2 * s);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Correlation

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw UsageError("pearson: length mismatch");
  if (x.size() < 3) throw DataError("pearson: need at least 3 observations");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Augmented Dickey-Fuller

/// MacKinnon (1994) approximate p-value for the constant-only, single-series tau statistic.
inline double mackinnon_p_constant(double tau) {
  constexpr double tau_max = 2.74;
  constexpr double tau_min = -18.83;
  constexpr double tau_star = -1.61;
  constexpr double small_p[] = {2.1659, 1.4412, 0.038269};
  constexpr double large_p[] = {1.7339, 0.93202, -0.12745, -0.010368};
  if (tau > tau_max) return 1.0;
  if (tau < tau_min) return 0.0;
  double z = 0.0;
  if (tau <= tau_star) {
    z = small_p[0] + small_p[1] * tau + small_p[2] * tau * tau;
  } else {
    z = large_p[0] + large_p[1] * tau + large_p[2] * tau * tau + large_p[3] * tau * tau * tau;
  }
  return boost::math::cdf(boost::math::normal(), z);
}

enum class LagSelection { Fixed, Aic };

struct AdfResult {
  double test_stat = 0.0;
  double p_value = 1.0;
  std::size_t lags_used = 0;
  std::size_t nobs = 0;
  const char* regression = "constant";
};

namespace detail {

/// Regression of dy_t on [y_{t-1}, dy_{t-1..t-lags}, 1] using the last `nobs` differences.
inline OlsResult adf_regression(std::span<const double> y, std::size_t lags, std::size_t nobs) {
  const std::size_t n = y.size();
  std::vector<double> dy(n - 1);
  for (std::size_t t = 1; t < n; ++t) dy[t - 1] = y[t] - y[t - 1];
  Matrix x(nobs, lags + 2);
  std::vector<double> resp(nobs);
  const std::size_t first = dy.size() - nobs;
  for (std::size_t r = 0; r < nobs; ++r) {
    const std::size_t t = first + r;  // index into dy
    resp[r] = dy[t];
    x(r, 0) = y[t];  // level y_{t-1} relative to dy[t] = y[t+1]-y[t]
    for (std::size_t l = 1; l <= lags; ++l) x(r, l) = dy[t - l];
    x(r, lags + 1) = 1.0;
  }
  return ols(x, resp);
}

inline double ols_aic(const OlsResult& r) {
  const double n = static_cast<double>(r.nobs);
  const double llf = -n / 2.0 * (std::log(2.0 * std::numbers::pi) + std::log(r.ssr / n) + 1.0);
  return -2.0 * llf + 2.0 * static_cast<double>(r.coef.size());
}

}  // namespace detail

/**
 * ADF unit-root test with a constant. With LagSelection::Aic every lag in
 * 0..max_lag is fitted on a common sample and the AIC minimiser is refitted
 * on its full sample.
 */
inline AdfResult adf_test(std::span<const double> series, std::size_t max_lag, LagSelection selection = LagSelection::Fixed) {
  const std::size_t n = series.size();
  if (n <= 2 * (max_lag + 2)) throw DataError("adf: series too short for the requested lag");
  const auto [mn, mx] = std::minmax_element(series.begin(), series.end());
  if (*mn == *mx) throw DataError("adf: constant series");

  std::size_t lags = max_lag;
  if (selection == LagSelection::Aic) {
    const std::size_t common = n - 1 - max_lag;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l <= max_lag; ++l) {
      const double aic = detail::ols_aic(detail::adf_regression(series, l, common));
      if (aic < best) {
        best = aic;
        lags = l;
      }
    }
  }
  const auto fit = detail::adf_regression(series, lags, n - 1 - lags);
  AdfResult r;
  r.test_stat = fit.t_stat(0);
  r.p_value = mackinnon_p_constant(r.test_stat);
  r.lags_used = lags;
  r.nobs = fit.nobs;
  return r;
}

/// Default maximum lag 12 (n/100)^(1/4) (Schwert).
inline std::size_t schwert_max_lag(std::size_t n) {
  return static_cast<std::size_t>(std::ceil(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

// ---------------------------------------------------------------------------
// Granger causality

struct GrangerResult {
  std::size_t lag = 0;
  std::size_t nobs = 0;  ///< regression rows, series length minus lag
  double f_stat = 0.0;
  double f_pvalue = 1.0;
  double chi2_stat = 0.0;
  double chi2_pvalue = 1.0;
  double lr_stat = 0.0;
  double lr_pvalue = 1.0;
  std::size_t df_num = 0;
  std::size_t df_denom = 0;
  double ssr_restricted = 0.0;
  double ssr_unrestricted = 0.0;
};

/// Statistics from the two residual sums of squares (rows = regression observations).
inline GrangerResult granger_from_ssr(double ssr_r, double ssr_u, std::size_t nobs, std::size_t lag) {
  if (nobs <= 2 * lag + 1) throw DataError("granger: too few observations");
  GrangerResult g;
  g.lag = lag;
  g.nobs = nobs;
  g.df_num = lag;
  g.df_denom = nobs - 2 * lag - 1;
  g.ssr_restricted = ssr_r;
  g.ssr_unrestricted = ssr_u;
  const double diff = std::max(0.0, ssr_r - ssr_u);
  const double n = static_cast<double>(nobs);
  g.f_stat = (diff / static_cast<double>(lag)) / (ssr_u / static_cast<double>(g.df_denom));
  g.chi2_stat = n * diff / ssr_u;
  g.lr_stat = n * std::log(std::max(1.0, ssr_r / ssr_u));
  g.f_pvalue = boost::math::cdf(boost::math::complement(
      boost::math::fisher_f(static_cast<double>(lag), static_cast<double>(g.df_denom)), g.f_stat));
  const boost::math::chi_squared chi(static_cast<double>(lag));
  g.chi2_pvalue = boost::math::cdf(boost::math::complement(chi, g.chi2_stat));
  g.lr_pvalue = boost::math::cdf(boost::math::complement(chi, g.lr_stat));
  return g;
}

/**
 * Does `cause` help predict `effect`? Restricted model: effect on a constant
 * and its own `lag` lags; unrestricted adds `lag` lags of cause. Requires
 * length > 3 lag + 1 so the unrestricted fit keeps a residual degree of freedom.
 */
inline GrangerResult granger_test(std::span<const double> cause, std::span<const double> effect, std::size_t lag) {
  if (cause.size() != effect.size()) throw UsageError("granger: series lengths differ");
  if (lag == 0) throw UsageError("granger: lag must be positive");
  const std::size_t T = effect.size();
  if (T <= 3 * lag + 1) throw DataError("granger: series too short for lag " + std::to_string(lag));
  const std::size_t nobs = T - lag;
  Matrix xr(nobs, lag + 1);
  Matrix xu(nobs, 2 * lag + 1);
  std::vector<double> y(nobs);
  for (std::size_t r = 0; r < nobs; ++r) {
    const std::size_t t = r + lag;
    y[r] = effect[t];
    for (std::size_t l = 1; l <= lag; ++l) {
      xr(r, l - 1) = xu(r, l - 1) = effect[t - l];
      xu(r, lag + l - 1) = cause[t - l];
    }
    xr(r, lag) = 1.0;
    xu(r, 2 * lag) = 1.0;
  }
  const auto restricted = ols(xr, y);
  const auto unrestricted = ols(xu, y);
  assert(unrestricted.ssr <= restricted.ssr * (1.0 + 1e-9) + 1e-300);
  return granger_from_ssr(restricted.ssr, unrestricted.ssr, nobs, lag);
}

inline std::vector<GrangerResult> granger_sweep(std::span<const double> cause, std::span<const double> effect, std::size_t max_lag = 7) {
  if (max_lag == 0) throw UsageError("granger: max_lag must be positive");
  std::vector<GrangerResult> out;
  for (std::size_t l = 1; l <= max_lag; ++l) out.push_back(granger_test(cause, effect, l));
  return out;
}

// ---------------------------------------------------------------------------
// Square-root variance stabilisation of a kernel density estimate

/// ||K||_2^2 for the standard Gaussian kernel, 1/(2 sqrt(pi)).
inline constexpr double kGaussianKernelL2 = 0.5 * std::numbers::inv_sqrtpi;

enum class TestDensity { Uniform, GaussianMixture };

/// Uniform on [0, 1], or 0.75 N(0, 1) + 0.25 N(4, 1).
inline double test_density(TestDensity d, double x) {
  if (d == TestDensity::Uniform) return (x >= 0.0 && x <= 1.0) ? 1.0 : 0.0;
  auto phi = [](double z) { return std::exp(-0.5 * z * z) * std::numbers::inv_sqrtpi / std::numbers::sqrt2; };
  return 0.75 * phi(x) + 0.25 * phi(x - 4.0);
}

inline double sample_density(TestDensity d, Rng& rng) {
  if (d == TestDensity::Uniform) return rng.uniform();
  return rng.uniform() < 0.75 ? rng.normal() : 4.0 + rng.normal();
}

struct VariancePoint {
  double x = 0.0;
  double density = 0.0;
  double var_raw_nh = 0.0;   ///< n h Var[f_hat(x)]
  double var_sqrt_nh = 0.0;  ///< n h Var[sqrt f_hat(x)]
};

/**
 * Monte-Carlo variance of a Gaussian-kernel density estimate and of its
 * square root, both scaled by n h. Rep r draws from Rng(derive_seed(seed, r)),
 * so the result is independent of `threads`.
 */
inline std::vector<VariancePoint> hellinger_variance_check(TestDensity density, std::size_t n, double h,
                                                           const std::vector<double>& eval_points, std::size_t reps,
                                                           std::uint64_t seed, std::size_t threads = 0) {
  if (n == 0 || reps < 2) throw UsageError("variance check: need n >= 1 and reps >= 2");
  if (!(h > 0.0)) throw UsageError("variance check: bandwidth must be positive");
  if (eval_points.empty()) throw UsageError("variance check: no evaluation points");
  for (double x : eval_points)
    if (test_density(density, x) < 0.05) throw DataError("variance check: true density below 0.05 at evaluation point");
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

  const std::size_t P = eval_points.size();
  std::vector<double> est(reps * P, 0.0);
  const double cutoff = 8.0 * h;
  const double norm = std::numbers::inv_sqrtpi / std::numbers::sqrt2 / (static_cast<double>(n) * h);
  auto run = [&](std::size_t rep) {
    Rng rng(derive_seed(seed, rep));
    double* out = &est[rep * P];
    for (std::size_t i = 0; i < n; ++i) {
      const double s = sample_density(density, rng);
      for (std::size_t p = 0; p < P; ++p) {
        const double u = eval_points[p] - s;
        if (std::abs(u) < cutoff) out[p] += std::exp(-0.5 * (u / h) * (u / h));
      }
    }
    for (std::size_t p = 0; p < P; ++p) out[p] *= norm;
  };
  std::vector<std::future<void>> workers;
  for (std::size_t w = 0; w < threads; ++w) {
    workers.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t rep = w; rep < reps; rep += threads) run(rep);
    }));
  }
  for (auto& f : workers) f.get();

  std::vector<VariancePoint> out;
  const double nh = static_cast<double>(n) * h;
  for (std::size_t p = 0; p < P; ++p) {
    double m_raw = 0.0;
    double m_sqrt = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      m_raw += est[r * P + p];
      m_sqrt += std::sqrt(est[r * P + p]);
    }
    m_raw /= static_cast<double>(reps);
    m_sqrt /= static_cast<double>(reps);
    double v_raw = 0.0;
    double v_sqrt = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const double a = est[r * P + p] - m_raw;
      const double b = std::sqrt(est[r * P + p]) - m_sqrt;
      v_raw += a * a;
      v_sqrt += b * b;
    }
    const double denom = static_cast<double>(reps - 1);
    out.push_back({eval_points[p], test_density(density, eval_points[p]), nh * v_raw / denom, nh * v_sqrt / denom});
  }
  return out;
}

}  // namespace crrix
