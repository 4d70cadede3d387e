#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "clab/metric.hpp"
#include "clab/stats.hpp"

using namespace clab;

namespace {

// Largest pairwise distance on level r, one unrestricted BFS per vertex.
int girth_oracle(const CausalMap& m, int r) {
  int best = 0;
  for (vid s = m.level_begin(r); s < m.level_end(r); ++s) {
    const auto d = bfs_distances(m.graph(), std::vector<vid>{s});
    for (vid t = m.level_begin(r); t < m.level_end(r); ++t) best = std::max(best, d[t]);
  }
  return best;
}

CausalMap kesten_map(int r, Rng& rng) {
  return build_causal(sample_kesten(OffspringLaw::geometric(), 3 * r, 1 << 24, rng));
}

}  // namespace

TEST(Girth, SingletonLevel) {
  Rng rng(1);
  const auto m = build_causal(sample_kesten(OffspringLaw::point_mass(1), 30, 100, rng));
  EXPECT_EQ(girth_at_height(m, 10).girth, 0);
  EXPECT_TRUE(girth_at_height(m, 10).exact);
}

TEST(Girth, MatchesAllPairsOracle) {
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const int r = 1 + static_cast<int>(rng.below(15));
    const auto m = kesten_map(r, rng);
    const auto g = girth_at_height(m, r);
    ASSERT_TRUE(g.exact);
    ASSERT_EQ(g.girth, girth_oracle(m, r)) << "r=" << r;
    ASSERT_LE(g.girth, 2 * r);
    ASSERT_EQ(g.level_size, m.level_size(r));
  }
}

TEST(Girth, TrivialBound) {
  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    const int r = 1 + static_cast<int>(rng.below(40));
    const auto m = kesten_map(r, rng);
    ASSERT_LE(girth_at_height(m, r).girth, 2 * r);
  }
}

TEST(Girth, ShallowTruncationRejected) {
  Rng rng(4);
  const auto m = build_causal(sample_kesten(OffspringLaw::geometric(), 20, 1 << 20, rng));
  EXPECT_THROW(girth_at_height(m, 10), TruncationTooShallow);
  EXPECT_NO_THROW(girth_at_height(m, 6));
}

TEST(Girth, LowerBoundModes) {
  Rng rng(5);
  int inexact = 0;
  for (int i = 0; i < 100; ++i) {
    const int r = 8 + static_cast<int>(rng.below(16));
    const auto m = kesten_map(r, rng);
    const int exact = girth_at_height(m, r).girth;
    const auto capped = girth_at_height(m, r, 1);
    ASSERT_LE(capped.girth, exact);
    inexact += !capped.exact;
    const int stop = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * r)));
    const auto early = girth_at_height(m, r, std::numeric_limits<int>::max(), stop);
    ASSERT_LE(early.girth, exact);
    ASSERT_GE(early.girth, std::min(stop, exact));
    ASSERT_TRUE(!early.exact || early.girth == exact);
    const auto lb = girth_lower_bound(m, r, 3, rng);
    ASSERT_FALSE(lb.exact && lb.level_size > 1);
    ASSERT_LE(lb.girth, exact);
  }
  EXPECT_GT(inexact, 0);
}

TEST(Girth, SmallHandExamples) {
  // a star: level 1 is a 7-cycle and the root is 2 hops from everything
  const auto m = build_causal(decode("7 0 0 0 0 0 0 0"));
  EXPECT_EQ(girth_at_height(m, 1).girth, 2);
  const auto wide = build_causal(decode("3 1 1 1 1 1 1 0 0 0"));
  EXPECT_EQ(girth_at_height(wide, 3).girth, girth_oracle(wide, 3));
}

TEST(Volume, PathMap) {
  const auto m = build_causal(decode("1 1 1 1 1 1 0"));
  for (int r = 0; r <= 6; ++r) EXPECT_EQ(ball_volume(m, r), r + 1);
}

TEST(Volume, EqualsLevelSums) {
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const auto t = sample_kesten(OffspringLaw::geometric(), 40, 1 << 20, rng);
    const auto m = build_causal(t);
    const auto vols = ball_volumes(m, 40);
    const auto sizes = generation_sizes(t);
    long long acc = 0;
    for (int r = 0; r <= 40; ++r) {
      acc += sizes[r];
      ASSERT_EQ(vols[r], acc);
    }
    // BFS oracle on the cautrig variant, where distance to the root is also the height
    const auto trig = build_cautrig(t, false);
    const auto d = bfs_distances(trig.graph(), std::vector<vid>{0});
    for (int r : {0, 7, 40}) ASSERT_EQ(ball_volume(trig, r), std::count_if(d.begin(), d.end(), [r](int x) { return x >= 0 && x <= r; }));
  }
}

TEST(Volume, GrowthExponent) {
  const auto law = OffspringLaw::geometric();
  std::vector<double> slopes;
  const std::vector<double> radii{64, 128, 256, 512, 1024};
  for (std::uint64_t i = 0; i < 200; ++i) {
    Rng rng = seed_stream(66, i);
    const auto m = build_causal(sample_kesten(law, 1024, 1 << 26, rng));
    const auto vols = ball_volumes(m, 1024);
    std::vector<double> ys;
    for (double r : radii) ys.push_back(static_cast<double>(vols[static_cast<std::size_t>(r)]));
    slopes.push_back(stats::fit_loglog(radii, ys).slope);
  }
  const double med = stats::median(slopes);
  EXPECT_GE(med, 1.8);
  EXPECT_LE(med, 2.2);
}

TEST(Distance, Basics) {
  const auto m = build_causal(decode("2 1 0 0"));
  EXPECT_EQ(distance(m, 2, 2), 0);
  EXPECT_EQ(distance(m, 0, 1), 1);
  EXPECT_EQ(distance(m, 1, 2), 1);
  EXPECT_EQ(distance(m, 3, 2), 2);
  EXPECT_EQ(distance(m, 2, 3), distance(m, 3, 2));
  EXPECT_THROW(distance(m, 0, 9), InvalidArgument);
}

TEST(Distance, RootDistanceIsHeight) {
  Rng rng(7);
  const auto law = OffspringLaw::geometric();
  int draws = 0;
  while (draws < 10000) {
    const auto m = build_causal(sample_kesten(law, 60, 1 << 20, rng));
    const auto field = distance_field(m, std::vector<vid>{m.root()});
    for (int j = 0; j < 100; ++j, ++draws) {
      const vid v = static_cast<vid>(rng.below(static_cast<std::uint64_t>(m.size())));
      ASSERT_EQ(field.dist[v], m.height(v));
    }
    const vid v = static_cast<vid>(rng.below(static_cast<std::uint64_t>(m.size())));
    ASSERT_EQ(distance(m, m.root(), v), m.height(v));
  }
}

TEST(Distance, FieldIsConsistent) {
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    const auto m = build_causal(sample_kesten(OffspringLaw::geometric(), 30, 1 << 20, rng));
    std::vector<vid> src;
    for (int k = 0; k < 3; ++k) src.push_back(static_cast<vid>(rng.below(static_cast<std::uint64_t>(m.size()))));
    const auto f = distance_field(m, src);
    for (vid s : src) ASSERT_EQ(f.dist[s], 0);
    for (vid v = 0; v < m.size(); ++v) {
      ASSERT_GE(f.dist[v], 0);
      if (f.dist[v] == 0) {
        ASSERT_NE(std::find(src.begin(), src.end(), v), src.end());
      }
      for (auto w : m.neighbors(v)) ASSERT_LE(std::abs(f.dist[v] - f.dist[w]), 1);
    }
    const auto capped = distance_field(m, src, 3);
    for (vid v = 0; v < m.size(); ++v) ASSERT_EQ(capped.dist[v], f.dist[v] <= 3 ? f.dist[v] : -1);
  }
}

TEST(Girth, AdaptiveTruncationMatchesFull) {
  const auto law = OffspringLaw::geometric();
  const auto biased = size_biased(law);
  for (std::uint64_t i = 0; i < 100; ++i) {
    const int r = 4 + static_cast<int>(i % 40);
    const auto g = sample_girth(law, biased, r, mix_seed(12, i), 1 << 24);
    Rng rng(mix_seed(12, i));
    const auto full = build_causal(sample_kesten(law, biased, 3 * r, 1 << 24, rng));
    ASSERT_TRUE(g.exact);
    ASSERT_EQ(g.girth, girth_at_height(full, r).girth) << "r=" << r;
    ASSERT_LE(g.truncation, 2 * r);
  }
}
