#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "clab/error.hpp"
#include "clab/rng.hpp"

namespace clab::stats {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw DegenerateInput("mean of empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Midpoint median.
inline double median(std::vector<double> xs) {
  if (xs.empty()) throw DegenerateInput("median of empty sample");
  const std::size_t n = xs.size();
  std::nth_element(xs.begin(), xs.begin() + n / 2, xs.end());
  const double hi = xs[n / 2];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(xs.begin(), xs.begin() + n / 2);
  return 0.5 * (lo + hi);
}

/// Largest sample value v with empirical P(X >= v) >= 1/2.
inline double upper_median(std::vector<double> xs) {
  if (xs.empty()) throw DegenerateInput("median of empty sample");
  const std::size_t k = xs.size() / 2;  // 0-based index of the (n/2 + 1)-th order statistic
  std::nth_element(xs.begin(), xs.begin() + k, xs.end());
  return xs[k];
}

/// Type-7 sample quantile, q in [0, 1].
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw DegenerateInput("quantile of empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const std::size_t j = std::min(i + 1, xs.size() - 1);
  return xs[i] + (pos - static_cast<double>(i)) * (xs[j] - xs[i]);
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Percentile bootstrap interval for `statistic` over resamples of `xs`.
inline Interval bootstrap_ci(std::span<const double> xs,
                             const std::function<double(std::vector<double>)>& statistic,
                             Rng& rng, int resamples = 1000, double level = 0.95) {
  if (xs.empty()) throw DegenerateInput("bootstrap of empty sample");
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(resamples));
  std::vector<double> buf(xs.size());
  for (int b = 0; b < resamples; ++b) {
    for (auto& x : buf) x = xs[rng.below(xs.size())];
    stats.push_back(statistic(buf));
  }
  const double tail = 0.5 * (1.0 - level);
  return {quantile(stats, tail), quantile(stats, 1.0 - tail)};
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  Interval slope_ci;  ///< slope +- 1.96 standard errors unless replaced by a bootstrap interval
};

/// Ordinary least squares y = intercept + slope * x.
inline LineFit fit_line(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 3) throw DegenerateInput("line fit needs >= 3 paired points");
  const double n = static_cast<double>(xs.size());
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx <= 0.0) throw DegenerateInput("line fit with constant abscissa");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - fit.intercept - fit.slope * xs[i];
    rss += e * e;
  }
  fit.slope_se = std::sqrt(rss / (n - 2.0) / sxx);
  fit.slope_ci = {fit.slope - 1.96 * fit.slope_se, fit.slope + 1.96 * fit.slope_se};
  return fit;
}

/// OLS on (log x, log y). Requires >= 3 points, all positive.
inline LineFit fit_loglog(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 3) throw DegenerateInput("log-log fit needs >= 3 paired points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw DegenerateInput("log-log fit needs positive values");
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  return fit_line(lx, ly);
}

/// Log-log slope of per-abscissa medians with a bootstrap interval over
/// replications. `table[i][j]` is replication i at abscissa xs[j].
inline LineFit fit_loglog_replicated(std::span<const double> xs,
                                     const std::vector<std::vector<double>>& table, Rng& rng,
                                     int resamples = 1000) {
  if (table.empty()) throw DegenerateInput("no replications to fit");
  auto medians_of = [&](const std::vector<std::size_t>& rows) {
    std::vector<double> out;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      std::vector<double> col;
      for (auto i : rows) col.push_back(table[i][j]);
      out.push_back(median(col));
    }
    return out;
  };
  std::vector<std::size_t> all(table.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  LineFit fit = fit_loglog(xs, medians_of(all));
  std::vector<double> slopes;
  std::vector<std::size_t> rows(table.size());
  for (int b = 0; b < resamples; ++b) {
    for (auto& r : rows) r = rng.below(table.size());
    slopes.push_back(fit_loglog(xs, medians_of(rows)).slope);
  }
  fit.slope_ci = {quantile(slopes, 0.025), quantile(slopes, 0.975)};
  return fit;
}

/// Upper tail probability of the chi-squared distribution.
inline double chi_squared_sf(double statistic, double dof) {
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

struct ChiSquared {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Pearson goodness of fit of `counts` against `probs`. Cells with expected
/// count below `min_expected` are pooled into one trailing cell.
inline ChiSquared chi_squared_test(std::span<const long long> counts, std::span<const double> probs,
                                   double min_expected = 5.0) {
  if (counts.size() != probs.size() || counts.empty()) throw DegenerateInput("chi-squared needs paired cells");
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), 0LL));
  double stat = 0.0;
  int cells = 0;
  double pooled_obs = 0.0, pooled_exp = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = probs[i] * total;
    if (e < min_expected) {
      pooled_obs += static_cast<double>(counts[i]);
      pooled_exp += e;
      continue;
    }
    stat += (static_cast<double>(counts[i]) - e) * (static_cast<double>(counts[i]) - e) / e;
    ++cells;
  }
  if (pooled_exp > 0.0) {
    stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++cells;
  }
  ChiSquared out;
  out.statistic = stat;
  out.dof = std::max(cells - 1, 1);
  out.p_value = chi_squared_sf(stat, out.dof);
  return out;
}

/// Two-sided Kolmogorov-Smirnov statistic of integer samples against a CDF
/// `cdf(k) = P(X <= k)`.
inline double ks_statistic_discrete(std::vector<long long> samples, const std::function<double(long long)>& cdf) {
  if (samples.empty()) throw DegenerateInput("KS of empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < samples.size()) {
    const long long k = samples[i];
    std::size_t j = i;
    while (j < samples.size() && samples[j] == k) ++j;
    // empirical CDF just below k and at k
    const double below = static_cast<double>(i) / n;
    const double at = static_cast<double>(j) / n;
    d = std::max(d, std::abs(at - cdf(k)));
    d = std::max(d, std::abs(below - cdf(k - 1)));
    i = j;
  }
  return d;
}

}  // namespace clab::stats
