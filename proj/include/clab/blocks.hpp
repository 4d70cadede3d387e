#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "clab/causal_map.hpp"
#include "clab/error.hpp"
#include "clab/graph.hpp"
#include "clab/offspring.hpp"
#include "clab/rng.hpp"
#include "clab/stats.hpp"
#include "clab/tree.hpp"

namespace clab {

/// Height-r slice of the quarter-plane model: i.i.d. trees truncated at r,
/// up to and including the first one reaching r, with linear levels.
struct Block {
  CausalMap map;
  int r = 0;
  int xi = 0;               ///< number of trees; the last one is the first to reach r
  std::vector<vid> left;    ///< leftmost vertex of each level 0..r
  std::vector<vid> right;   ///< rightmost vertex of each level 0..r
  std::vector<vid> bottom;  ///< level 0
  std::vector<vid> top;     ///< level r
};

/// Builds the block from its trees; only the last may (and must) reach height r.
inline Block make_block(std::vector<PlaneTree> trees, int r) {
  if (r < 1) throw InvalidArgument("block height must be >= 1");
  if (trees.empty()) throw InvalidArgument("block needs at least one tree");
  for (std::size_t i = 0; i + 1 < trees.size(); ++i)
    if (trees[i].max_height() >= r) throw InvalidArgument("only the last tree of a block may reach its height");
  if (trees.back().max_height() != r) throw InvalidArgument("the last tree of a block must reach its height exactly");
  Block b;
  b.r = r;
  b.xi = static_cast<int>(trees.size());
  b.map = build_causal_forest(trees);
  for (int h = 0; h <= r; ++h) {
    b.left.push_back(b.map.level_begin(h));
    b.right.push_back(b.map.level_end(h) - 1);
  }
  for (vid v = b.map.level_begin(0); v < b.map.level_end(0); ++v) b.bottom.push_back(v);
  for (vid v = b.map.level_begin(r); v < b.map.level_end(r); ++v) b.top.push_back(v);
  return b;
}

/// Samples trees with height cap r until the first one reaches r.
inline Block extract_block(const OffspringLaw& law, int r, Rng& rng, long long size_cap) {
  if (r < 1) throw InvalidArgument("block height must be >= 1");
  std::vector<PlaneTree> trees;
  long long used = 0;
  while (true) {
    if (used >= size_cap) throw SizeCapExceeded(size_cap);
    try {
      trees.push_back(sample_gw(law, r, size_cap - used, rng));
    } catch (const SizeCapExceeded&) {
      throw SizeCapExceeded(size_cap);
    }
    used += trees.back().size();
    if (trees.back().truncated_at()) break;
  }
  return make_block(std::move(trees), r);
}

/// Minimal distance inside the block between its left and right sides.
inline int width(const Block& b) {
  const vid n = b.map.size();
  std::vector<char> is_right(static_cast<std::size_t>(n), 0);
  for (auto v : b.right) is_right[v] = 1;
  Bfs bfs(n);
  const vid hit = bfs.run(b.map.graph(), b.left, [](vid) { return true; }, [&](vid v) { return is_right[v] != 0; });
  if (hit < 0) throw Unreachable("right side unreachable from left side");
  return bfs.dist(hit);
}

/// Maximum number of edge-disjoint bottom-to-top paths (unit-capacity max-flow).
inline int dual_width_flow(const Block& b) {
  const vid n = b.map.size();
  FlowNetwork net(n + 2);
  const vid s = n, t = n + 1;
  const auto big = static_cast<std::int64_t>(b.map.edge_count()) + 1;
  for (auto v : b.bottom) net.add_arc(s, v, big);
  for (auto v : b.top) net.add_arc(v, t, big);
  for (const auto& e : b.map.edges()) net.add_undirected(e.u, e.v, 1);
  return static_cast<int>(net.max_flow(s, t));
}

/// Length of the shortest left-to-right path in the planar dual of the block,
/// where bottom and top boundary edges are not crossable.
inline int dual_width_crossing(const Block& b) {
  const CausalMap& m = b.map;
  const int r = b.r;
  // region k of strip h (between levels h and h+1) lies between the vertical
  // edges into level-(h+1) positions k-1 and k; k = 0 and k = size(h+1) are
  // the outer left and right faces
  constexpr std::int32_t kLeft = 0, kRight = 1;
  std::vector<std::int64_t> base(static_cast<std::size_t>(r) + 1, 2);
  for (int h = 0; h < r; ++h) base[h + 1] = base[h] + std::max(0, m.level_size(h + 1) - 1);
  auto region = [&](int h, vid k) -> std::int32_t {
    const vid mh = m.level_size(h + 1);
    if (k <= 0) return kLeft;
    if (k >= mh) return kRight;
    return static_cast<std::int32_t>(base[h] + k - 1);
  };
  const auto nodes = static_cast<std::int32_t>(base[r]);
  std::vector<std::pair<std::int32_t, std::int32_t>> dual;
  for (int h = 0; h < r; ++h) {
    const vid lo = m.level_begin(h + 1);
    for (vid c = lo; c < m.level_end(h + 1); ++c) dual.push_back({region(h, c - lo), region(h, c - lo + 1)});
  }
  for (int h = 1; h < r; ++h) {
    const vid lo = m.level_begin(h);
    vid below_children = 0;
    for (vid j = lo; j + 1 < m.level_end(h); ++j) {
      below_children += m.child_count(j);
      const vid k = j - lo;
      dual.push_back({region(h - 1, k + 1), region(h, below_children)});
    }
  }
  const Csr g = make_csr(nodes, dual);
  const auto dist = bfs_distances(g, std::vector<std::int32_t>{kLeft});
  if (dist[kRight] < 0) throw Unreachable("no dual crossing");
  return dist[kRight];
}

/// Dual width: the max-flow value, cross-checked against the dual crossing.
inline int dual_width(const Block& b) {
  const int flow = dual_width_flow(b);
  const int dual = dual_width_crossing(b);
  if (flow != dual) throw MengerMismatch(flow, dual);
  return flow;
}

/// Maximum height reached in the subtree of each vertex.
inline std::vector<int> subtree_reach(const CausalMap& m) {
  std::vector<int> reach(static_cast<std::size_t>(m.size()));
  for (vid v = m.size(); v-- > 0;) {
    reach[v] = std::max(reach[v], m.height(v));
    if (m.parent(v) >= 0) reach[m.parent(v)] = std::max(reach[m.parent(v)], reach[v]);
  }
  return reach;
}

/// N_r(m, h): number of height-m sub-blocks starting at level h that fit in
/// the block, i.e. level-h vertices whose subtree reaches level h + m.
inline vid subblock_counts(const Block& b, int m, int h, const std::vector<int>& reach) {
  if (m < 0 || h < 0 || h + m > b.r) throw InvalidArgument("sub-block must fit: need h + m <= r");
  vid count = 0;
  for (vid v = b.map.level_begin(h); v < b.map.level_end(h); ++v) count += reach[v] >= h + m;
  return count;
}

inline vid subblock_counts(const Block& b, int m, int h) { return subblock_counts(b, m, h, subtree_reach(b.map)); }

/// min over 0 <= h <= r of the level size N_r(0, h).
inline vid min_generation_statistic(const Block& b) {
  vid best = std::numeric_limits<vid>::max();
  for (int h = 0; h <= b.r; ++h) best = std::min(best, b.map.level_size(h));
  return best;
}

/// Level sizes of a freshly sampled block, without building its graph; the
/// draws match extract_block with the same stream.
inline std::vector<std::int64_t> block_level_sizes(const OffspringLaw& law, int r, Rng& rng, long long size_cap) {
  if (r < 1) throw InvalidArgument("block height must be >= 1");
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(r) + 1, 0);
  long long used = 0;
  while (true) {
    if (used >= size_cap) throw SizeCapExceeded(size_cap);
    PlaneTree t;
    try {
      t = sample_gw(law, r, size_cap - used, rng);
    } catch (const SizeCapExceeded&) {
      throw SizeCapExceeded(size_cap);
    }
    used += t.size();
    for (int h = 0; h <= t.max_height(); ++h) sizes[h] += t.level_size(h);
    if (t.truncated_at()) return sizes;
  }
}

struct BlockSample {
  int replication = 0;
  std::uint64_t seed = 0;
  bool censored = false;
  int width = 0;
  int dual_width = 0;
  int xi = 0;
  vid min_generation = 0;
};

struct MedianEstimate {
  double f = 0.0;  ///< median width
  double g = 0.0;  ///< median dual width
  stats::Interval f_ci;
  stats::Interval g_ci;
  int censored = 0;
  std::vector<BlockSample> samples;
};

/// Block observables for replication `index` of a run seeded with `master`.
inline BlockSample sample_block(const OffspringLaw& law, int r, std::uint64_t master, int index, long long size_cap,
                                bool with_dual = true) {
  BlockSample s;
  s.replication = index;
  s.seed = master;
  Rng rng = seed_stream(master, static_cast<std::uint64_t>(index));
  try {
    const Block b = extract_block(law, r, rng, size_cap);
    s.width = width(b);
    s.dual_width = with_dual ? dual_width(b) : 0;
    s.xi = b.xi;
    s.min_generation = min_generation_statistic(b);
  } catch (const SizeCapExceeded&) {
    s.censored = true;
  }
  return s;
}

/// Medians of width and dual width (largest v with P(X >= v) >= 1/2) with
/// percentile bootstrap intervals; censored replications are excluded.
inline MedianEstimate estimate_medians(const OffspringLaw& law, int r, int replications, std::uint64_t master,
                                       long long size_cap, int resamples = 1000) {
  if (replications < 1) throw InvalidArgument("replications must be >= 1");
  MedianEstimate out;
  std::vector<double> ws, gs;
  for (int i = 0; i < replications; ++i) {
    out.samples.push_back(sample_block(law, r, master, i, size_cap));
    const auto& s = out.samples.back();
    if (s.censored) {
      ++out.censored;
      continue;
    }
    ws.push_back(s.width);
    gs.push_back(s.dual_width);
  }
  if (ws.empty()) throw DegenerateInput("every replication was censored");
  out.f = stats::upper_median(ws);
  out.g = stats::upper_median(gs);
  Rng boot = seed_stream(master, 0xB007'0000'0000ULL + static_cast<std::uint64_t>(r));
  out.f_ci = stats::bootstrap_ci(ws, stats::upper_median, boot, resamples);
  out.g_ci = stats::bootstrap_ci(gs, stats::upper_median, boot, resamples);
  return out;
}

/// Trees T_0, T_1, ... of the quarter-plane model, each from its own stream.
///
/// Trees are generated breadth-first, so the tree sampled with a larger height
/// cap extends the one sampled with a smaller cap; any truncation of the
/// sequence is therefore a consistent view of one realization.
class TreeSequence {
 public:
  TreeSequence(OffspringLaw law, std::uint64_t seed, long long size_cap)
      : law_(std::move(law)), seed_(seed), size_cap_(size_cap) {}

  PlaneTree tree(std::int64_t i, int cap) const {
    Rng rng(stream(i));
    return sample_gw(law_, cap, size_cap_, rng);
  }

  long long size_cap() const { return size_cap_; }
  const OffspringLaw& law() const { return law_; }
  Rng stream(std::int64_t i) const { return Rng(mix_seed(seed_, static_cast<std::uint64_t>(i))); }

  std::vector<PlaneTree> trees(std::int64_t first, std::int64_t last, int cap) const {
    std::vector<PlaneTree> out;
    out.reserve(static_cast<std::size_t>(last - first + 1));
    long long used = 0;
    for (auto i = first; i <= last; ++i) {
      out.push_back(tree(i, cap));
      used += out.back().size();
      if (used > size_cap_) throw SizeCapExceeded(size_cap_);
    }
    return out;
  }

  /// Index of the k-th tree (k >= 1) reaching height r, scanning from 0.
  std::int64_t nth_reaching(int r, int k, std::int64_t limit) const {
    int found = 0;
    for (std::int64_t i = 0; i < limit; ++i)
      if (tree(i, r).max_height() >= r && ++found == k) return i;
    return -1;
  }

 private:
  OffspringLaw law_;
  std::uint64_t seed_;
  long long size_cap_;
};

namespace detail {

// Linear causal forest of trees first..last in breadth-first layout, grown one
// generation at a time with each tree drawing from its own stream. No edge
// list is stored: the neighbours of v are its parent, its children
// first_child[v]..first_child[v+1]-1 and v-1, v+1 when on the same level.
class ForestGrower {
 public:
  ForestGrower(const TreeSequence& seq, std::int64_t first, std::int64_t last) : seq_(seq) {
    const auto n = static_cast<vid>(last - first + 1);
    for (vid t = 0; t < n; ++t) frontier_.push_back({1, std::make_unique<Rng>(seq.stream(first + t))});
    first_child_.assign(static_cast<std::size_t>(n) + 1, n);
    parent_.assign(static_cast<std::size_t>(n), -1);
    info_.assign(static_cast<std::size_t>(n), 0);
    info_.front() |= kFirst;
    info_.back() |= kLast;
    level_begin_ = {0, n};
  }

  int height() const { return static_cast<int>(level_begin_.size()) - 2; }
  bool complete() const { return frontier_.empty(); }
  vid size() const { return static_cast<vid>(parent_.size()); }
  vid level_begin(int h) const { return level_begin_[static_cast<std::size_t>(h)]; }

  void grow_to(int cap) {
    // a critical forest of n trees has n vertices per level on average
    const auto expect = static_cast<std::size_t>(
        std::min<double>(1.25 * static_cast<double>(level_begin_[1]) * (cap + 1), static_cast<double>(seq_.size_cap())));
    if (expect > parent_.capacity()) {
      parent_.reserve(expect);
      info_.reserve(expect);
      first_child_.reserve(expect + 1);
    }
    while (height() < cap && !frontier_.empty()) step();
  }

  // BFS from `source` until `target` (on level 0) is reached; returns its
  // distance, or -1 when it exceeds `bound`. Vertices at height h farther than
  // bound - h from the source are not expanded.
  int distance(vid source, vid target, int bound = std::numeric_limits<int>::max()) {
    dist_.assign(parent_.size(), -1);
    queue_.clear();
    dist_[source] = 0;
    queue_.push_back(source);
    for (std::size_t head = 0; head < queue_.size(); ++head) {
      const vid v = queue_[head];
      const int dv = dist_[v] + 1;
      auto visit = [&](vid w) {
        if (dist_[w] < 0 && dv + static_cast<int>(info_[w] & kHeight) <= bound) {
          dist_[w] = dv;
          queue_.push_back(w);
        }
      };
      if (v == target) return dist_[v];
      if (parent_[v] >= 0) visit(parent_[v]);
      if (!(info_[v] & kFirst)) visit(v - 1);
      if (!(info_[v] & kLast)) visit(v + 1);
      for (vid c = first_child_[v]; c < first_child_[v + 1]; ++c) visit(c);
    }
    return -1;
  }

 private:
  static constexpr std::uint32_t kFirst = 1u << 30, kLast = 1u << 31, kHeight = kFirst - 1;

  struct Active {
    vid size;  // vertices of this tree on the top level
    std::unique_ptr<Rng> rng;
  };

  void step() {
    const vid lo = level_begin_[level_begin_.size() - 2];
    const vid hi = size();
    const auto& law = seq_.law();
    const long long cap = seq_.size_cap();
    const auto h = static_cast<std::uint32_t>(height() + 1);
    vid v = lo;
    next_.clear();
    for (auto& a : frontier_) {
      vid kids = 0;
      for (vid j = 0; j < a.size; ++j, ++v) {
        first_child_[static_cast<std::size_t>(v)] = size();
        const std::int64_t k = law.sample(*a.rng);
        if (static_cast<std::int64_t>(size()) + k > std::min<long long>(cap, std::numeric_limits<vid>::max() - 1))
          throw SizeCapExceeded(cap);
        for (std::int64_t c = 0; c < k; ++c) parent_.push_back(v);
        kids += static_cast<vid>(k);
      }
      if (kids > 0) next_.push_back({kids, std::move(a.rng)});
    }
    std::swap(frontier_, next_);
    const vid end = size();
    info_.resize(static_cast<std::size_t>(end), h);
    if (end > hi) {
      info_[hi] |= kFirst;
      info_[end - 1] |= kLast;
    }
    first_child_.resize(static_cast<std::size_t>(end) + 1, end);
    first_child_[static_cast<std::size_t>(hi)] = end;
    level_begin_.push_back(end);
  }

  const TreeSequence& seq_;
  std::vector<Active> frontier_, next_;
  std::vector<vid> first_child_, parent_, level_begin_;
  std::vector<std::uint32_t> info_;  // height, plus flags for the ends of a level
  std::vector<int> dist_;
  std::vector<vid> queue_;
};

}  // namespace detail

/// Distance between the roots of trees `first` and `last` inside the causal
/// forest graph of trees first..last.
///
/// A path of length L never rises above height L/2, so the distance computed
/// in the forest truncated at H is exact once it is at most 2H + 1. The
/// truncation grows by a factor 4, or straight to half the current distance
/// when that is smaller, which is then exact.
inline int left_right_distance(const TreeSequence& seq, std::int64_t first, std::int64_t last, int initial_cap = 8) {
  if (last <= first) throw InvalidArgument("left_right_distance needs at least two trees");
  detail::ForestGrower forest(seq, first, last);
  const vid target = static_cast<vid>(last - first);
  int cap = std::max(1, initial_cap);
  int bound = std::numeric_limits<int>::max();
  while (true) {
    forest.grow_to(cap);
    const int d = forest.distance(0, target, bound);
    if (d < 0) throw Unreachable("roots are disconnected");
    bound = d;
    if (d / 2 <= cap || forest.complete()) return d;
    cap = std::min(d / 2, 4 * cap);
  }
}

struct ShortcutCheck {
  int r = 0;
  std::int64_t xi1 = 0;  ///< 1-based index of the first tree reaching r
  std::int64_t xi2 = 0;  ///< 1-based index of the second
  int distance = 0;      ///< L between tree 1 and tree xi2
  bool holds = false;    ///< distance <= xi1 + 2r
};

/// Checks L(1, xi2) <= xi1 + 2r, where xi1 < xi2 index the first two trees
/// reaching height r.
inline ShortcutCheck shortcut_check(const TreeSequence& seq, int r, std::int64_t limit) {
  ShortcutCheck c;
  c.r = r;
  const auto i1 = seq.nth_reaching(r, 1, limit);
  const auto i2 = i1 < 0 ? -1 : seq.nth_reaching(r, 2, limit);
  if (i2 < 0) throw SizeCapExceeded(limit);
  c.xi1 = i1 + 1;
  c.xi2 = i2 + 1;
  const int bound = static_cast<int>(c.xi1 + 2 * r);
  c.distance = left_right_distance(seq, 0, i2, std::max(1, bound / 2));
  c.holds = c.distance <= bound;
  return c;
}

struct RenormCheck {
  std::vector<int> radii;
  std::vector<double> f;      ///< median width at r
  std::vector<double> f_m;    ///< median width at m = r / 4
  std::vector<double> bound;  ///< min(m, (r/m) f(m)) at r
  double c_hat = 0.0;         ///< f / bound at the smallest radius
  std::vector<bool> holds;    ///< f(r) >= c_hat / 2 * bound(r)
};

/// Empirical check of f(r) >= c * min(m, (r/m) f(m)) at m = r/4, with the
/// constant fitted once at the smallest radius and a factor-2 stability margin.
inline RenormCheck renorm_check(const OffspringLaw& law, const std::vector<int>& radii, int replications,
                                std::uint64_t master, long long size_cap) {
  RenormCheck out;
  out.radii = radii;
  auto median_width = [&](int r) {
    std::vector<double> ws;
    for (int i = 0; i < replications; ++i) {
      const auto s = sample_block(law, r, mix_seed(master, static_cast<std::uint64_t>(r)), i, size_cap, false);
      if (!s.censored) ws.push_back(s.width);
    }
    if (ws.empty()) throw DegenerateInput("every replication was censored");
    return stats::upper_median(ws);
  };
  for (int r : radii) {
    if (r < 4) throw InvalidArgument("renorm check needs r >= 4");
    const int m = r / 4;
    out.f.push_back(median_width(r));
    out.f_m.push_back(median_width(m));
    out.bound.push_back(std::min(static_cast<double>(m), static_cast<double>(r) / m * out.f_m.back()));
  }
  out.c_hat = out.bound.front() > 0 ? out.f.front() / out.bound.front() : 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) out.holds.push_back(out.f[i] >= 0.5 * out.c_hat * out.bound[i]);
  return out;
}

}  // namespace clab
