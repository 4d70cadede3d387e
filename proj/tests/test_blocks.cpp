#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "clab/blocks.hpp"

using namespace clab;

namespace {

// Width by one BFS per left-side vertex.
int width_oracle(const Block& b) {
  int best = std::numeric_limits<int>::max();
  for (auto s : b.left) {
    const auto d = bfs_distances(b.map.graph(), std::vector<vid>{s});
    for (auto t : b.right) best = std::min(best, d[t]);
  }
  return best;
}

// Highest level reached below v, by explicit descent through child ranges.
int reach_oracle(const CausalMap& m, vid v) {
  int best = m.height(v);
  for (vid j = 0; j < m.child_count(v); ++j) best = std::max(best, reach_oracle(m, m.first_child(v) + j));
  return best;
}

Block random_block(Rng& rng, int r) { return extract_block(OffspringLaw::geometric(), r, rng, 1 << 22); }

}  // namespace

TEST(Block, SingleColumn) {
  Rng rng(1);
  const Block b = extract_block(OffspringLaw::point_mass(1), 6, rng, 100);
  EXPECT_EQ(b.xi, 1);
  EXPECT_EQ(width(b), 0);
  EXPECT_EQ(dual_width(b), 1);
  EXPECT_EQ(min_generation_statistic(b), 1);
  EXPECT_EQ(b.left, b.right);
}

TEST(Block, EdgeBlock) {
  const Block b = make_block({decode("1 0")}, 1);
  EXPECT_EQ(width(b), 0);
  EXPECT_EQ(dual_width(b), 1);
}

TEST(Block, Structure) {
  Rng rng(2);
  for (int i = 0; i < 300; ++i) {
    const int r = 1 + static_cast<int>(rng.below(20));
    const Block b = random_block(rng, r);
    ASSERT_EQ(b.left.size(), static_cast<std::size_t>(r + 1));
    ASSERT_EQ(b.right.size(), static_cast<std::size_t>(r + 1));
    ASSERT_EQ(b.map.max_height(), r);
    ASSERT_EQ(static_cast<int>(b.bottom.size()), b.xi);
    for (int h = 0; h <= r; ++h) {
      ASSERT_EQ(b.map.height(b.left[h]), h);
      ASSERT_EQ(b.map.height(b.right[h]), h);
    }
    for (vid v = b.map.level_begin(r); v < b.map.level_end(r); ++v) ASSERT_EQ(b.map.tree_of(v), b.xi - 1);
    ASSERT_EQ(check_invariants(b.map), "");
  }
}

TEST(Block, WidthMatchesAllPairsOracle) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const int r = 1 + static_cast<int>(rng.below(20));
    const Block b = random_block(rng, r);
    const int w = width(b);
    ASSERT_EQ(w, width_oracle(b));
    ASSERT_LE(w, 2 * r);
    ASSERT_GE(w, 0);
  }
}

TEST(Block, MengerEquality) {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const int r = 1 + static_cast<int>(rng.below(20));
    const Block b = random_block(rng, r);
    const int flow = dual_width_flow(b);
    const int dual = dual_width_crossing(b);
    ASSERT_EQ(flow, dual) << "r=" << r;
    ASSERT_GE(flow, 1);
  }
}

TEST(Block, DualWidthHandExample) {
  // two trees: a cherry of height 1, then a root with three children whose
  // middle child has a child
  const Block b = make_block({decode("0"), decode("3 0 1 0 0")}, 2);
  // a single vertex reaches the top, so one crossing
  EXPECT_EQ(dual_width(b), 1);
  const Block c = make_block({decode("2 1 1 0 0")}, 2);
  EXPECT_EQ(dual_width(c), 2);
  EXPECT_EQ(width(c), 0);  // the root is on both sides
}

TEST(Block, XiIsGeometric) {
  const auto law = OffspringLaw::geometric();
  Rng rng(5);
  const int r = 8, n = 100000;
  std::vector<long long> xs;
  for (int i = 0; i < n; ++i) xs.push_back(extract_block(law, r, rng, 1 << 20).xi);
  double s = 0.0;
  for (int i = 0; i < r; ++i) s = 1.0 / (2.0 - s);
  const double p = 1.0 - s;  // P(Height >= r)
  const double d = stats::ks_statistic_discrete(xs, [p](long long k) { return k < 1 ? 0.0 : 1.0 - std::pow(1.0 - p, double(k)); });
  EXPECT_LT(d, 1.63 / std::sqrt(double(n)));
}

TEST(Block, SubblockCounts) {
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const int r = 1 + static_cast<int>(rng.below(20));
    const Block b = random_block(rng, r);
    const auto reach = subtree_reach(b.map);
    EXPECT_EQ(subblock_counts(b, r, 0, reach), 1);
    for (int h = 0; h <= r; ++h) {
      EXPECT_EQ(subblock_counts(b, 0, h, reach), b.map.level_size(h));
      for (int m = 0; h + m <= r; ++m) {
        vid want = 0;
        for (vid v = b.map.level_begin(h); v < b.map.level_end(h); ++v) want += reach_oracle(b.map, v) >= h + m;
        ASSERT_EQ(subblock_counts(b, m, h, reach), want);
      }
    }
    EXPECT_THROW(subblock_counts(b, r, 1, reach), InvalidArgument);
  }
}

TEST(Block, MinGenerationStatistic) {
  const auto law = OffspringLaw::geometric();
  const int r = 256, reps = 10000;
  std::vector<double> stat;
  for (int i = 0; i < reps; ++i) {
    Rng rng = seed_stream(77, static_cast<std::uint64_t>(i));
    const auto sizes = block_level_sizes(law, r, rng, 1 << 24);
    const auto m = *std::min_element(sizes.begin(), sizes.end());
    if (i < 20) {
      Rng again = seed_stream(77, static_cast<std::uint64_t>(i));
      ASSERT_EQ(min_generation_statistic(extract_block(law, r, again, 1 << 24)), m);
    }
    ASSERT_GE(m, 1);
    stat.push_back(static_cast<double>(m));
  }
  std::vector<double> frac;
  for (double delta : {0.2, 0.1, 0.05}) {
    double c = 0;
    for (double x : stat) c += x <= delta * r;
    frac.push_back(c / reps);
  }
  EXPECT_GE(frac[0], frac[1]);
  EXPECT_GE(frac[1], frac[2]);
  EXPECT_GT(frac[0], frac[2]);
}

TEST(Medians, DegenerateLaw) {
  const auto est = estimate_medians(OffspringLaw::point_mass(1), 10, 20, 3, 1000, 100);
  EXPECT_EQ(est.f, 0.0);
  EXPECT_EQ(est.g, 1.0);
  EXPECT_EQ(est.censored, 0);
}

TEST(Medians, BoundedAndIntervals) {
  const auto law = OffspringLaw::geometric();
  for (int r : {4, 16, 32}) {
    const auto est = estimate_medians(law, r, 200, 11, 1 << 22, 300);
    EXPECT_LE(est.f, 2.0 * r);
    EXPECT_GE(est.g, 1.0);
    EXPECT_LE(est.f_ci.lo, est.f);
    EXPECT_GE(est.f_ci.hi, est.f);
    EXPECT_LE(est.g_ci.lo, est.g);
    EXPECT_GE(est.g_ci.hi, est.g);
  }
}

TEST(Medians, CensoringIsCounted) {
  const auto est = estimate_medians(OffspringLaw::geometric(), 64, 50, 5, 3000, 50);
  EXPECT_GT(est.censored, 0);
  EXPECT_LT(est.censored, 50);
  int flagged = 0;
  for (const auto& s : est.samples) flagged += s.censored;
  EXPECT_EQ(flagged, est.censored);
}

TEST(Medians, RenormalisationTrend) {
  const auto check = renorm_check(OffspringLaw::geometric(), {64, 128, 256}, 200, 21, 1 << 24);
  ASSERT_EQ(check.holds.size(), 3u);
  EXPECT_GT(check.c_hat, 0.0);
  for (std::size_t i = 0; i < check.holds.size(); ++i) EXPECT_TRUE(check.holds[i]) << check.radii[i];
}

TEST(Subadditive, ExtinctLawGivesPath) {
  const TreeSequence seq(OffspringLaw::point_mass(0), 1, 1 << 20);
  EXPECT_EQ(left_right_distance(seq, 0, 9), 9);
  EXPECT_EQ(left_right_distance(seq, 3, 4), 1);
}

TEST(Subadditive, TriangleInequality) {
  const auto law = OffspringLaw::geometric();
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const TreeSequence seq(law, mix_seed(31, i), 1 << 24);
    const int n = 20, k = 15;
    const int a = left_right_distance(seq, 0, n + k - 1);
    const int b = left_right_distance(seq, 0, n - 1);
    const int c = left_right_distance(seq, n - 1, n + k - 1);
    ASSERT_LE(a, b + c);
    ASSERT_LE(a, n + k - 1);
  }
}

TEST(Subadditive, TruncationIsExact) {
  // the raised truncation must agree with a generous fixed one
  const auto law = OffspringLaw::geometric();
  for (std::uint64_t i = 0; i < 100; ++i) {
    const TreeSequence seq(law, mix_seed(32, i), 1 << 24);
    const int n = 60;
    const auto trees = seq.trees(0, n - 1, n);
    const auto m = build_causal_forest(trees);
    const auto d = bfs_distances(m.graph(), std::vector<vid>{0});
    ASSERT_EQ(left_right_distance(seq, 0, n - 1, 1), d[m.level_end(0) - 1]);
  }
}

TEST(Subadditive, ShortcutBound) {
  const auto law = OffspringLaw::geometric();
  for (std::uint64_t i = 0; i < 200; ++i) {
    const TreeSequence seq(law, mix_seed(33, i), 1 << 24);
    for (int r : {2, 4, 8, 16, 32}) {
      const auto c = shortcut_check(seq, r, 1 << 20);
      ASSERT_TRUE(c.holds) << "r=" << r << " L=" << c.distance << " xi1=" << c.xi1;
      ASSERT_LT(c.xi1, c.xi2);
    }
  }
}
