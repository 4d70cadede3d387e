#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "clab/offspring.hpp"
#include "clab/stats.hpp"

using namespace clab;

namespace {

// Independent pmf of the stable family via log-gamma:
// (-1)^k binom(alpha, k) = Gamma(k - alpha) / (Gamma(-alpha) Gamma(k + 1)).
double stable_pmf_oracle(double alpha, double gamma, long long k) {
  if (k == 0) return gamma;
  if (k == 1) return 1.0 - gamma * alpha;
  const double lg = std::lgamma(static_cast<double>(k) - alpha) - std::lgamma(static_cast<double>(k) + 1.0);
  return gamma * std::exp(lg) / std::tgamma(-alpha);
}

void expect_law_invariants(const OffspringLaw& law) {
  EXPECT_NEAR(law.total_mass(), 1.0, 1e-12) << law.name();
  EXPECT_NEAR(law.table_mean() + law.tail_mean(), 1.0, 1e-10) << law.name();
  for (double p : law.pmf()) ASSERT_GE(p, 0.0) << law.name();
  EXPECT_GE(law.tail_mass(), 0.0);
}

}  // namespace

TEST(Geometric, Pmf) {
  const auto law = OffspringLaw::geometric();
  EXPECT_DOUBLE_EQ(law.probability(0), 0.5);
  EXPECT_DOUBLE_EQ(law.probability(1), 0.25);
  EXPECT_DOUBLE_EQ(law.mean(), 1.0);
  EXPECT_DOUBLE_EQ(law.beta(), 1.0);
}

TEST(Geometric, VarianceMatchesSummation) {
  long double second = 0.0L;
  for (int k = 0; k <= 10000; ++k) second += static_cast<long double>(k) * k * std::pow(0.5L, k + 1);
  const auto law = OffspringLaw::geometric();
  EXPECT_NEAR(law.variance(), static_cast<double>(second - 1.0L), 1e-12);
}

TEST(Stable, FirstTwoWeights) {
  const auto law = OffspringLaw::stable(1.5, 0.5);
  EXPECT_DOUBLE_EQ(law.probability(0), 0.5);
  EXPECT_DOUBLE_EQ(law.probability(1), 0.25);
  EXPECT_DOUBLE_EQ(law.beta(), 2.0);
  EXPECT_TRUE(std::isinf(law.variance()));
}

TEST(Stable, PmfMatchesLogGamma) {
  const auto law = OffspringLaw::stable(1.3, 0.6);
  for (long long k : {2LL, 3LL, 10LL, 1000LL, 100000LL, 1LL << 20}) {
    const double want = stable_pmf_oracle(1.3, 0.6, k);
    EXPECT_NEAR(law.probability(k) / want, 1.0, 1e-9) << k;
  }
}

TEST(Stable, TailStabilizes) {
  const double alpha = 1.3, gamma = 0.6;
  const auto law = OffspringLaw::stable(alpha, gamma);
  // oracle tail: one minus the log-gamma partial sums, in extended precision
  std::vector<long long> ks{1000, 10000, 100000, 1000000};
  std::vector<double> scaled;
  long double partial = 0.0L;
  long long k = 0;
  for (long long target : ks) {
    for (; k < target; ++k) partial += stable_pmf_oracle(alpha, gamma, k);
    const double tail = static_cast<double>(1.0L - partial);
    EXPECT_NEAR(law.tail_probability(target) / tail, 1.0, 1e-6) << target;
    scaled.push_back(std::pow(static_cast<double>(target), alpha) * law.tail_probability(target));
  }
  const double limit = gamma / (alpha * std::tgamma(-alpha));
  for (double s : scaled) {
    EXPECT_GT(s, 0.0);
    EXPECT_NEAR(s / limit, 1.0, 0.01);
  }
}

TEST(Stable, RejectsInvalidParameters) {
  EXPECT_THROW(OffspringLaw::stable(1.5, 0.7), InvalidArgument);
  EXPECT_THROW(OffspringLaw::stable(1.0, 0.5), InvalidArgument);
  EXPECT_THROW(OffspringLaw::stable(2.0, 0.5), InvalidArgument);
  EXPECT_THROW(OffspringLaw::stable(1.5, 0.0), InvalidArgument);
  EXPECT_NO_THROW(OffspringLaw::stable(1.5, 1.0 / 1.5));
}

TEST(Custom, Validation) {
  EXPECT_THROW(OffspringLaw::custom({0.5, 0.4}), InvalidArgument);
  EXPECT_THROW(OffspringLaw::custom({0.5, 0.0, 0.4, 0.1}), InvalidArgument);
  EXPECT_THROW(OffspringLaw::custom({-0.1, 1.2, -0.1}), InvalidArgument);
  EXPECT_NO_THROW(OffspringLaw::custom({0.25, 0.5, 0.25}));
}

TEST(Laws, Invariants) {
  expect_law_invariants(OffspringLaw::geometric());
  expect_law_invariants(OffspringLaw::poisson1());
  expect_law_invariants(OffspringLaw::stable(1.5, 0.5));
  expect_law_invariants(OffspringLaw::stable(1.3, 0.6));
  expect_law_invariants(OffspringLaw::stable(1.7, 0.2));
  expect_law_invariants(OffspringLaw::custom({0.25, 0.5, 0.25}));
}

TEST(SizeBiased, Geometric) {
  const auto bar = size_biased(OffspringLaw::geometric());
  EXPECT_EQ(bar.probability(0), 0.0);
  EXPECT_DOUBLE_EQ(bar.probability(1), 1.0 * 0.25);
  EXPECT_DOUBLE_EQ(bar.probability(3), 3.0 / 16.0);
}

TEST(SizeBiased, UnitMassAndNoZero) {
  for (const auto& law : {OffspringLaw::geometric(), OffspringLaw::poisson1(), OffspringLaw::stable(1.5, 0.5),
                          OffspringLaw::stable(1.3, 0.6), OffspringLaw::custom({0.3, 0.4, 0.3})}) {
    const auto bar = size_biased(law);
    EXPECT_EQ(bar.probability(0), 0.0) << law.name();
    EXPECT_NEAR(bar.total_mass(), 1.0, 1e-12) << law.name();
  }
}

TEST(Sample, DegenerateLaw) {
  const auto law = OffspringLaw::custom({0.0, 1.0});
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(law.sample(rng), 1);
}

TEST(Sample, GeometricMean) {
  const auto law = OffspringLaw::geometric();
  Rng rng(11);
  const int n = 1000000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += static_cast<double>(law.sample(rng));
  EXPECT_NEAR(sum / n, 1.0, 3.0 * std::sqrt(2.0) / std::sqrt(static_cast<double>(n)));
}

TEST(Sample, StableFrequencies) {
  const auto law = OffspringLaw::stable(1.5, 0.5);
  Rng rng(12);
  const int n = 1000000;
  std::vector<long long> counts(11, 0);
  for (int i = 0; i < n; ++i) {
    const auto k = law.sample(rng);
    if (k <= 10) ++counts[static_cast<std::size_t>(k)];
  }
  for (int k = 0; k <= 10; ++k) {
    const double p = stable_pmf_oracle(1.5, 0.5, k);
    const double se = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(static_cast<double>(counts[k]) / n, p, 4 * se) << k;
  }
}

TEST(Sample, StableTailBeyondCutoff) {
  // the size-biased stable law puts visible mass beyond the table (tail index alpha - 1)
  const auto law = size_biased(OffspringLaw::stable(1.2, 0.8));
  Rng rng(13);
  const int n = 2000000;
  const auto K = law.cutoff();
  int beyond = 0, far = 0;
  for (int i = 0; i < n; ++i) {
    const auto k = law.sample(rng);
    if (k > K) ++beyond;
    if (k > 4 * (K + 1)) ++far;
  }
  const double p = law.tail_mass();
  EXPECT_NEAR(static_cast<double>(beyond) / n, p, 4 * std::sqrt(p / n));
  const double pf = p * std::pow(4.0, -0.2);
  EXPECT_NEAR(static_cast<double>(far) / n, pf, 4 * std::sqrt(pf / n));
}

TEST(Sample, GeometricKolmogorovSmirnov) {
  const auto law = OffspringLaw::geometric();
  Rng rng(14);
  std::vector<long long> xs(1000000);
  for (auto& x : xs) x = law.sample(rng);
  const double d = stats::ks_statistic_discrete(xs, [](long long k) {
    return k < 0 ? 0.0 : 1.0 - std::ldexp(1.0, -static_cast<int>(k + 1));
  });
  EXPECT_LT(d, 0.002);
}

TEST(Sample, SizeBiasedFrequencies) {
  const auto bar = size_biased(OffspringLaw::geometric());
  Rng rng(15);
  const int n = 500000;
  std::vector<long long> counts(6, 0);
  for (int i = 0; i < n; ++i) {
    const auto k = bar.sample(rng);
    ASSERT_GE(k, 1);
    if (k <= 5) ++counts[static_cast<std::size_t>(k)];
  }
  for (int k = 1; k <= 5; ++k) {
    const double p = k * std::ldexp(1.0, -(k + 1));
    EXPECT_NEAR(static_cast<double>(counts[k]) / n, p, 4 * std::sqrt(p * (1 - p) / n)) << k;
  }
}
