#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clab/error.hpp"
#include "clab/rng.hpp"

namespace clab {

/// Offspring distribution on {0, 1, 2, ...}: an exact table up to a cutoff K
/// plus an analytic tail beyond K.
///
/// Laws are immutable and cheap to copy (the table is shared).
class OffspringLaw {
 public:
  enum class Tail { none, geometric, pareto };

  /// Table cutoff for the stable family.
  static constexpr std::int64_t kStableCutoff = std::int64_t{1} << 20;

  /// mu_k = 2^-(k+1). Mean 1, variance 2.
  static OffspringLaw geometric() {
    constexpr int cutoff = 128;
    Data d;
    d.name = "geometric";
    d.pmf.resize(cutoff + 1);
    for (int k = 0; k <= cutoff; ++k) d.pmf[k] = std::ldexp(1.0, -(k + 1));
    d.tail_mass = std::ldexp(1.0, -(cutoff + 1));
    d.tail_mean = (cutoff + 2) * std::ldexp(1.0, -(cutoff + 1));
    d.tail = Tail::geometric;
    d.mean = 1.0;
    d.variance = 2.0;
    return OffspringLaw(std::move(d));
  }

  /// Poisson with mean 1.
  static OffspringLaw poisson1() {
    constexpr int cutoff = 64;
    Data d;
    d.name = "poisson1";
    d.pmf.resize(cutoff + 1);
    double term = std::exp(-1.0);
    for (int k = 0; k <= cutoff; ++k) {
      d.pmf[k] = term;
      term /= (k + 1);
    }
    for (int k = cutoff + 1; k < cutoff + 100 && term > 0.0; ++k) {
      d.tail_mass += term;
      d.tail_mean += k * term;
      term /= (k + 1);
    }
    d.mean = 1.0;
    d.variance = 1.0;
    return OffspringLaw(std::move(d));
  }

  /// Critical law with generating function f(s) = s + gamma (1 - s)^alpha.
  ///
  /// mu_0 = gamma, mu_1 = 1 - gamma alpha, mu_k = gamma (-1)^k binom(alpha, k)
  /// for k >= 2, and mu([k, inf)) ~ c k^-alpha.
  static OffspringLaw stable(double alpha, double gamma) {
    if (!(alpha > 1.0 && alpha < 2.0)) throw InvalidArgument("stable law needs alpha in (1,2)");
    if (!(gamma > 0.0)) throw InvalidArgument("stable law needs gamma > 0");
    if (gamma * alpha > 1.0 + 1e-15) throw InvalidArgument("stable law needs gamma <= 1/alpha (mu_1 would be negative)");
    const std::int64_t cutoff = kStableCutoff;
    Data d;
    d.name = "stable(" + format_real(alpha) + "," + format_real(gamma) + ")";
    d.alpha = alpha;
    d.pmf.resize(static_cast<std::size_t>(cutoff + 1));
    // t_k = (-1)^k binom(alpha, k); t1_k, t2_k the same with alpha-1, alpha-2.
    double t = -alpha;
    double t1 = -(alpha - 1.0);
    double t2 = 2.0 - alpha;
    d.pmf[0] = gamma;
    d.pmf[1] = std::max(0.0, 1.0 - gamma * alpha);
    for (std::int64_t k = 2; k <= cutoff; ++k) {
      const double kd = static_cast<double>(k);
      t *= (kd - 1.0 - alpha) / kd;
      t1 *= (kd - alpha) / kd;
      if (k < cutoff) t2 *= (kd + 1.0 - alpha) / kd;  // t2 lags one index: t2_{K-1}
      d.pmf[static_cast<std::size_t>(k)] = gamma * t;
    }
    // sum_{k>K} t_k = -t1_K;   sum_{k>K} k t_k = alpha * t2_{K-1}
    d.tail_mass = -gamma * t1;
    d.tail_mean = gamma * alpha * t2;
    d.tail = Tail::pareto;
    d.tail_index = alpha;
    d.mean = 1.0;
    d.variance = std::numeric_limits<double>::infinity();
    d.stable_gamma = gamma;
    return OffspringLaw(std::move(d));
  }

  /// Law given by an explicit finite pmf; must be normalized to 1e-12 and
  /// critical to 1e-10.
  static OffspringLaw custom(std::vector<double> pmf) {
    if (pmf.empty()) throw InvalidArgument("custom pmf is empty");
    double total = 0.0, mean = 0.0, second = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
      if (!(pmf[k] >= 0.0)) throw InvalidArgument("custom pmf has a negative entry");
      total += pmf[k];
      mean += static_cast<double>(k) * pmf[k];
      second += static_cast<double>(k) * static_cast<double>(k) * pmf[k];
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("custom pmf does not sum to 1");
    if (std::abs(mean - 1.0) > 1e-10) throw InvalidArgument("custom pmf is not critical (mean != 1)");
    Data d;
    d.name = "custom";
    d.pmf = std::move(pmf);
    d.mean = mean;
    d.variance = second - mean * mean;
    return OffspringLaw(std::move(d));
  }

  /// Point mass at k. Not critical unless k = 1; used for degenerate
  /// reference cases such as immediate extinction.
  static OffspringLaw point_mass(std::int64_t k) {
    if (k < 0 || k > 1024) throw InvalidArgument("point mass must sit in [0, 1024]");
    Data d;
    d.name = "point_mass(" + std::to_string(k) + ")";
    d.pmf.assign(static_cast<std::size_t>(k) + 1, 0.0);
    d.pmf.back() = 1.0;
    d.mean = static_cast<double>(k);
    d.variance = 0.0;
    return OffspringLaw(std::move(d));
  }

  const std::string& name() const { return d_->name; }
  std::span<const double> pmf() const { return d_->pmf; }
  std::int64_t cutoff() const { return static_cast<std::int64_t>(d_->pmf.size()) - 1; }
  double tail_mass() const { return d_->tail_mass; }
  double tail_mean() const { return d_->tail_mean; }
  Tail tail_kind() const { return d_->tail; }

  double probability(std::int64_t k) const {
    if (k < 0 || k > cutoff()) return 0.0;
    return d_->pmf[static_cast<std::size_t>(k)];
  }

  /// P(X >= k), exact inside the table (suffix sums plus analytic tail mass).
  double tail_probability(std::int64_t k) const {
    if (k <= 0) return 1.0;
    if (k > cutoff()) return std::numeric_limits<double>::quiet_NaN();
    return d_->suffix[static_cast<std::size_t>(k)] + d_->tail_mass;
  }

  /// P(X <= k).
  double cdf(std::int64_t k) const {
    if (k < 0) return 0.0;
    if (k > cutoff()) return 1.0;
    return d_->cdf[static_cast<std::size_t>(k)];
  }

  /// Total mass, table plus tail.
  double total_mass() const { return d_->cdf.back() + d_->tail_mass; }
  double table_mean() const { return d_->table_mean; }

  double mean() const { return d_->mean; }
  double variance() const { return d_->variance; }
  std::optional<double> tail_exponent() const { return d_->alpha; }
  std::optional<double> stable_gamma() const { return d_->stable_gamma; }

  /// Generation growth exponent: 1 for finite variance, 1/(alpha-1) otherwise.
  double beta() const { return d_->alpha ? 1.0 / (*d_->alpha - 1.0) : 1.0; }

  bool critical() const { return std::abs(d_->mean - 1.0) <= 1e-10; }

  std::int64_t sample(Rng& rng) const {
    const double u = rng.uniform();
    const Data& d = *d_;
    if (u < d.cdf.back()) {
      std::size_t k = d.guide[static_cast<std::size_t>(u * static_cast<double>(kGuide))];
      while (d.cdf[k] <= u) ++k;
      return static_cast<std::int64_t>(k);
    }
    const std::int64_t first = cutoff() + 1;
    switch (d.tail) {
      case Tail::none:
        return first;
      case Tail::geometric:
        return first + static_cast<std::int64_t>(std::floor(-std::log2(rng.uniform_pos())));
      case Tail::pareto: {
        const double x = static_cast<double>(first) * std::pow(rng.uniform_pos(), -1.0 / d.tail_index);
        constexpr double cap = 0x1.0p62;
        return x >= cap ? static_cast<std::int64_t>(cap) : std::max(first, static_cast<std::int64_t>(x));
      }
    }
    return first;
  }

 private:
  static constexpr std::size_t kGuide = 4096;

  struct Data {
    std::string name;
    std::vector<double> pmf;
    std::vector<double> cdf;
    std::vector<double> suffix;
    std::vector<std::uint32_t> guide;
    double tail_mass = 0.0;
    double tail_mean = 0.0;
    double table_mean = 0.0;
    Tail tail = Tail::none;
    double tail_index = 0.0;
    double mean = 1.0;
    double variance = 0.0;
    std::optional<double> alpha;
    std::optional<double> stable_gamma;
  };

  explicit OffspringLaw(Data d) {
    const std::size_t n = d.pmf.size();
    d.cdf.resize(n);
    d.suffix.resize(n + 1);
    double acc = 0.0, comp = 0.0;  // Kahan
    for (std::size_t k = 0; k < n; ++k) {
      const double y = d.pmf[k] - comp;
      const double s = acc + y;
      comp = (s - acc) - y;
      acc = s;
      d.cdf[k] = acc;
      d.table_mean += static_cast<double>(k) * d.pmf[k];
    }
    d.suffix[n] = 0.0;
    for (std::size_t k = n; k-- > 0;) d.suffix[k] = d.suffix[k + 1] + d.pmf[k];
    d.guide.resize(kGuide);
    std::size_t k = 0;
    for (std::size_t i = 0; i < kGuide; ++i) {
      const double level = static_cast<double>(i) / static_cast<double>(kGuide);
      while (k + 1 < n && d.cdf[k] <= level) ++k;
      d.guide[i] = static_cast<std::uint32_t>(k);
    }
    d_ = std::make_shared<const Data>(std::move(d));
  }

  static std::string format_real(double x) {
    std::string s = std::to_string(x);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

  friend OffspringLaw size_biased(const OffspringLaw& law);

  std::shared_ptr<const Data> d_;
};

/// The size-biased law (k mu_k)_k used for spine reproduction. Total mass is
/// 1 because the base law has mean 1; its own mean is 1 + sigma^2.
inline OffspringLaw size_biased(const OffspringLaw& law) {
  if (!law.critical()) throw InvalidArgument("size-biasing needs a critical law");
  OffspringLaw::Data d;
  d.name = "size_biased(" + law.name() + ")";
  const auto pmf = law.pmf();
  d.pmf.resize(pmf.size());
  for (std::size_t k = 0; k < pmf.size(); ++k) d.pmf[k] = static_cast<double>(k) * pmf[k];
  d.tail_mass = law.tail_mean();
  d.tail_mean = std::numeric_limits<double>::infinity();
  d.variance = std::numeric_limits<double>::infinity();
  d.mean = 1.0 + law.variance();
  d.alpha = std::nullopt;
  switch (law.tail_kind()) {
    case OffspringLaw::Tail::pareto:
      d.tail = OffspringLaw::Tail::pareto;
      d.tail_index = *law.tail_exponent() - 1.0;
      break;
    case OffspringLaw::Tail::geometric:
      d.tail = OffspringLaw::Tail::geometric;
      break;
    case OffspringLaw::Tail::none:
      d.tail = OffspringLaw::Tail::none;
      break;
  }
  return OffspringLaw(std::move(d));
}

}  // namespace clab
