#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>
#include <vector>

#include "clab/causal_map.hpp"

using namespace clab;

namespace {

// Tree with prescribed level sizes; the parents of each level are a sorted
// uniform draw from the level below.
PlaneTree layered_tree(Rng& rng, int depth, int min_size, int max_size) {
  std::vector<int> sizes{1};
  for (int h = 1; h <= depth; ++h)
    sizes.push_back(min_size + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_size - min_size + 1))));
  std::vector<vid> counts;
  for (int h = 0; h <= depth; ++h) {
    std::vector<vid> kids(static_cast<std::size_t>(sizes[h]), 0);
    if (h < depth)
      for (int j = 0; j < sizes[h + 1]; ++j) ++kids[rng.below(static_cast<std::uint64_t>(sizes[h]))];
    counts.insert(counts.end(), kids.begin(), kids.end());
  }
  return PlaneTree::from_child_counts(counts);
}

std::set<std::pair<vid, vid>> edge_set(const CausalMap& m) {
  std::set<std::pair<vid, vid>> out;
  for (const auto& e : m.edges()) out.insert({std::min(e.u, e.v), std::max(e.u, e.v)});
  return out;
}

bool all_levels_at_least_three(const PlaneTree& t) {
  for (int h = 1; h <= t.max_height(); ++h)
    if (t.level_size(h) < 3) return false;
  return true;
}

}  // namespace

TEST(BuildCausal, PathTree) {
  const auto m = build_causal(decode("1 1 1 1 0"));
  EXPECT_EQ(m.size(), 5);
  EXPECT_EQ(m.edge_count(), 4);
  for (const auto& e : m.edges()) EXPECT_EQ(e.kind, EdgeKind::vertical);
}

TEST(BuildCausal, StarIsWheelWithoutHub) {
  const auto m = build_causal(decode("5 0 0 0 0 0"));
  EXPECT_EQ(m.edge_count(), 10);
  int horizontal = 0;
  for (const auto& e : m.edges()) horizontal += e.kind == EdgeKind::horizontal;
  EXPECT_EQ(horizontal, 5);
  for (vid v = 1; v <= 5; ++v) EXPECT_EQ(m.degree(v), 3);
  EXPECT_EQ(m.degree(0), 5);
}

TEST(BuildCausal, SmallLevelsStaySimple) {
  const auto two = build_causal(decode("2 0 0"));
  EXPECT_EQ(two.edge_count(), 3);
  EXPECT_EQ(check_invariants(two), "");
  const auto lin = build_causal(decode("5 0 0 0 0 0"), Mode::linear);
  EXPECT_EQ(lin.edge_count(), 9);
}

TEST(BuildCausal, InvariantsAndDistances) {
  Rng rng(1);
  const auto law = OffspringLaw::geometric();
  for (int i = 0; i < 500; ++i) {
    const auto t = sample_gw(law, 40, 1 << 20, rng);
    for (Mode mode : {Mode::cyclic, Mode::linear}) {
      const auto m = build_causal(t, mode);
      ASSERT_EQ(check_invariants(m), "");
      int vertical = 0;
      for (const auto& e : m.edges()) vertical += e.kind == EdgeKind::vertical;
      EXPECT_EQ(vertical, t.size() - 1);
      const auto d = bfs_distances(m.graph(), std::vector<vid>{0});
      for (vid v = 0; v < m.size(); ++v) ASSERT_EQ(d[v], m.height(v));
    }
  }
}

TEST(BuildCausal, EulerCharacteristic) {
  Rng rng(2);
  const auto law = OffspringLaw::geometric();
  for (int i = 0; i < 1000; ++i) {
    const auto t = sample_gw(law, 1000, 1 << 20, rng);
    const auto m = build_causal(t);
    const auto faces = face_lengths(m);
    ASSERT_EQ(static_cast<long long>(m.size()) - m.edge_count() + static_cast<long long>(faces.size()), 2)
        << encode(t);
  }
}

TEST(BuildForest, TwoRoots) {
  const std::vector<PlaneTree> forest{decode("0"), decode("0")};
  const auto m = build_causal_forest(forest);
  EXPECT_EQ(m.size(), 2);
  ASSERT_EQ(m.edge_count(), 1);
  EXPECT_EQ(m.edge(0).kind, EdgeKind::horizontal);
}

TEST(BuildForest, RootsFormPath) {
  const std::vector<PlaneTree> forest(7, decode("0"));
  const auto m = build_causal_forest(forest);
  EXPECT_EQ(m.edge_count(), 6);
  const auto d = bfs_distances(m.graph(), std::vector<vid>{0});
  EXPECT_EQ(d[6], 6);
}

TEST(BuildForest, LayoutMatchesConcatenation) {
  Rng rng(3);
  const auto law = OffspringLaw::geometric();
  for (int i = 0; i < 1000; ++i) {
    std::vector<PlaneTree> forest;
    const int n = 1 + static_cast<int>(rng.below(8));
    for (int j = 0; j < n; ++j) forest.push_back(sample_gw(law, 12, 1 << 20, rng));
    const auto m = build_causal_forest(forest);
    ASSERT_EQ(check_invariants(m), "");
    int hmax = 0;
    for (const auto& t : forest) hmax = std::max(hmax, t.max_height());
    ASSERT_EQ(m.max_height(), hmax);
    for (int h = 0; h <= hmax; ++h) {
      // oracle: level h is tree 0's level h, then tree 1's, ...
      std::vector<std::pair<int, vid>> want, got;
      for (int j = 0; j < n; ++j)
        for (vid v = forest[j].level_begin(h); v < forest[j].level_end(h); ++v)
          want.push_back({j, forest[j].child_count(v)});
      for (vid v = m.level_begin(h); v < m.level_end(h); ++v) got.push_back({m.tree_of(v), m.child_count(v)});
      ASSERT_EQ(got, want) << "level " << h;
      for (vid v = m.level_begin(h); v < m.level_end(h); ++v)
        if (h > 0) {
          ASSERT_EQ(m.tree_of(m.parent(v)), m.tree_of(v));
        }
    }
    // linear levels: exactly size - 1 horizontal edges per level
    std::vector<int> horiz(static_cast<std::size_t>(hmax) + 1, 0);
    for (const auto& e : m.edges())
      if (e.kind == EdgeKind::horizontal) {
        ++horiz[m.height(e.u)];
        ASSERT_EQ(e.v, e.u + 1);
      }
    for (int h = 0; h <= hmax; ++h) EXPECT_EQ(horiz[h], m.level_size(h) - 1);
  }
}

TEST(BuildCautrig, TriangularFacesUnchanged) {
  const auto t = decode("5 0 0 0 0 0");
  EXPECT_EQ(edge_set(build_cautrig(t, false)), edge_set(build_causal(t)));
  const auto with_apex = build_cautrig(t, true);
  EXPECT_EQ(with_apex.size(), 7);
  EXPECT_EQ(with_apex.edge_count(), 15);
}

TEST(BuildCautrig, ApexRejectedOnTruncatedTree) {
  Rng rng(4);
  const auto t = sample_gw(OffspringLaw::point_mass(1), 5, 100, rng);
  EXPECT_THROW(build_cautrig(t, true), InvalidArgument);
  EXPECT_NO_THROW(build_cautrig(t, false));
}

TEST(BuildCautrig, AllFacesAreTriangles) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const auto t = layered_tree(rng, 1 + static_cast<int>(rng.below(8)), 3, 9);
    ASSERT_TRUE(all_levels_at_least_three(t));
    const auto m = build_cautrig(t, true);
    ASSERT_EQ(check_invariants(m), "") << encode(t);
    const auto faces = face_lengths(m);
    for (auto f : faces) ASSERT_EQ(f, 3) << encode(t);
    ASSERT_EQ(static_cast<long long>(m.size()) - m.edge_count() + static_cast<long long>(faces.size()), 2);
    // a sphere triangulation has E = 3V - 6
    ASSERT_EQ(m.edge_count(), 3 * m.size() - 6);
  }
}

TEST(BuildCautrig, EulerOnRandomFiniteTrees) {
  Rng rng(6);
  const auto law = OffspringLaw::geometric();
  int checked_triangular = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto t = sample_gw(law, 100000, 1 << 20, rng);
    for (bool apex : {false, true}) {
      const auto m = build_cautrig(t, apex);
      ASSERT_EQ(check_invariants(m), "") << encode(t);
      const auto faces = face_lengths(m);
      ASSERT_EQ(static_cast<long long>(m.size()) - m.edge_count() + static_cast<long long>(faces.size()), 2)
          << encode(t) << " apex=" << apex;
      if (apex && all_levels_at_least_three(t) && t.max_height() >= 1) {
        ++checked_triangular;
        for (auto f : faces) ASSERT_EQ(f, 3) << encode(t);
      }
    }
  }
  EXPECT_GT(checked_triangular, 0);
}

TEST(BuildCautrig, ContainsCausal) {
  Rng rng(7);
  const auto law = OffspringLaw::geometric();
  for (int i = 0; i < 300; ++i) {
    const auto t = sample_gw(law, 30, 1 << 20, rng);
    const auto causal = edge_set(build_causal(t));
    const auto trig = edge_set(build_cautrig(t, false));
    for (const auto& e : causal) ASSERT_TRUE(trig.count(e));
  }
}

TEST(BuildCarpet, ExtremeEdgesOnly) {
  const auto small = decode("2 0 0");
  EXPECT_EQ(edge_set(build_carpet(small)), edge_set(build_causal(small)));
  const auto star = build_carpet(decode("5 0 0 0 0 0"));
  int up = 0;
  for (const auto& e : star.edges()) up += e.kind == EdgeKind::vertical;
  EXPECT_EQ(up, 2);
  EXPECT_EQ(check_invariants(star), "");
}

TEST(BuildCarpet, ConnectedSubgraphOfCausal) {
  Rng rng(8);
  const auto law = OffspringLaw::geometric();
  for (int i = 0; i < 10000; ++i) {
    const auto t = sample_gw(law, 30, 1 << 20, rng);
    for (Mode mode : {Mode::cyclic, Mode::linear}) {
      const auto carpet = build_carpet(t, mode);
      ASSERT_EQ(check_invariants(carpet), "") << encode(t);
      const auto causal = edge_set(build_causal(t, mode));
      for (const auto& e : edge_set(carpet)) ASSERT_TRUE(causal.count(e));
    }
  }
}

TEST(Export, CsvTables) {
  const auto m = build_causal(decode("2 0 0"));
  std::ostringstream edges, vertices;
  write_edges_csv(edges, m);
  write_vertices_csv(vertices, m);
  EXPECT_EQ(edges.str(), "edge_id,kind,u,v,height_u,height_v\n0,vertical,0,1,0,1\n1,vertical,0,2,0,1\n2,horizontal,1,2,1,1\n");
  EXPECT_EQ(vertices.str(), "vertex,height,tree,parent,degree\n0,0,0,-1,2\n1,1,0,0,2\n2,1,0,0,2\n");
}

TEST(Graph, MaxFlowSmall) {
  // two edge-disjoint paths between 0 and 3 in a 4-cycle plus a chord
  FlowNetwork net(4);
  net.add_undirected(0, 1);
  net.add_undirected(1, 3);
  net.add_undirected(0, 2);
  net.add_undirected(2, 3);
  net.add_undirected(1, 2);
  EXPECT_EQ(net.max_flow(0, 3), 2);
}
