#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "clab/error.hpp"
#include "clab/offspring.hpp"
#include "clab/rng.hpp"

namespace clab {

using vid = std::int32_t;

/// Rooted plane tree stored in breadth-first order.
///
/// Breadth-first order makes every generation a contiguous id range in
/// left-to-right plane order, and the children of a vertex a contiguous range
/// of the next generation.
class PlaneTree {
 public:
  /// The single-vertex tree.
  PlaneTree() : child_count_{0}, child_begin_{1, 1}, height_{0}, parent_{-1}, level_begin_{0, 1} {}

  /// Builds the tree whose breadth-first child-count sequence is `counts`.
  static PlaneTree from_child_counts(std::span<const vid> counts, std::optional<int> truncated_at = std::nullopt,
                                     std::vector<vid> spine = {}) {
    if (counts.empty()) throw InvalidArgument("tree code is empty");
    PlaneTree t;
    const auto n = static_cast<std::int64_t>(counts.size());
    t.child_count_.assign(counts.begin(), counts.end());
    t.child_begin_.resize(counts.size() + 1);
    t.height_.resize(counts.size());
    t.parent_.resize(counts.size());
    std::int64_t next = 1;
    t.height_[0] = 0;
    t.parent_[0] = -1;
    for (std::int64_t v = 0; v < n; ++v) {
      if (v >= next) throw InvalidArgument("tree code ends its breadth-first pass early");
      if (counts[v] < 0) throw InvalidArgument("negative child count in tree code");
      t.child_begin_[v] = static_cast<vid>(next);
      if (next + counts[v] > n) throw InvalidArgument("tree code implies more vertices than it lists");
      for (vid j = 0; j < counts[v]; ++j) {
        t.height_[next + j] = t.height_[v] + 1;
        t.parent_[next + j] = static_cast<vid>(v);
      }
      next += counts[v];
    }
    if (next != n) throw InvalidArgument("tree code implies a different vertex count than its length");
    t.child_begin_[n] = static_cast<vid>(n);
    const int hmax = t.height_.back();
    t.level_begin_.assign(static_cast<std::size_t>(hmax) + 2, 0);
    for (std::int64_t v = 0; v < n; ++v) ++t.level_begin_[t.height_[v] + 1];
    for (int h = 0; h <= hmax; ++h) t.level_begin_[h + 1] += t.level_begin_[h];
    if (truncated_at && hmax > *truncated_at) throw InvalidArgument("tree exceeds its truncation height");
    t.truncated_at_ = truncated_at;
    if (!spine.empty()) {
      if (spine[0] != 0) throw InvalidArgument("spine must start at the root");
      for (std::size_t h = 1; h < spine.size(); ++h)
        if (spine[h] < 0 || spine[h] >= n || t.parent_[spine[h]] != spine[h - 1])
          throw InvalidArgument("spine is not a line of descent");
    }
    t.spine_ = std::move(spine);
    return t;
  }

  vid size() const { return static_cast<vid>(child_count_.size()); }
  int max_height() const { return height_.back(); }
  int height(vid v) const { return height_[v]; }
  vid parent(vid v) const { return parent_[v]; }
  vid child_count(vid v) const { return child_count_[v]; }
  vid first_child(vid v) const { return child_begin_[v]; }
  vid level_begin(int h) const { return h > max_height() ? size() : level_begin_[h]; }
  vid level_end(int h) const { return h > max_height() ? size() : level_begin_[h + 1]; }
  vid level_size(int h) const { return h < 0 ? 0 : level_end(h) - level_begin(h); }

  std::span<const vid> child_counts() const { return child_count_; }
  std::span<const int> heights() const { return height_; }
  std::span<const vid> parents() const { return parent_; }

  /// Height cap the tree was generated with, if generation reached it.
  std::optional<int> truncated_at() const { return truncated_at_; }

  /// One vertex per generation 0..H when sampled as a conditioned tree.
  std::span<const vid> spine() const { return spine_; }
  bool has_spine() const { return !spine_.empty(); }

  bool operator==(const PlaneTree& o) const {
    return child_count_ == o.child_count_ && truncated_at_ == o.truncated_at_ && spine_ == o.spine_;
  }

 private:
  std::vector<vid> child_count_;
  std::vector<vid> child_begin_;
  std::vector<int> height_;
  std::vector<vid> parent_;
  std::vector<vid> level_begin_;
  std::optional<int> truncated_at_;
  std::vector<vid> spine_;
};

namespace detail {

inline vid checked_cap(long long size_cap) {
  if (size_cap < 1) throw InvalidArgument("size cap must be >= 1");
  return static_cast<vid>(std::min<long long>(size_cap, 0x7ffffff0LL));
}

}  // namespace detail

/// Galton-Watson tree generated breadth-first. Vertices of generation
/// `height_cap` get no children; the tree is flagged truncated when that
/// generation is non-empty.
namespace detail {

// Child counts of a Galton-Watson tree, generation by generation, for every
// vertex below height_cap. Returns the total number of vertices and whether
// the cap was reached with a nonempty generation.
inline std::pair<std::int64_t, bool> gw_counts(const OffspringLaw& law, int height_cap, vid cap, Rng& rng,
                                               std::vector<vid>& counts) {
  std::int64_t total = 1;
  std::int64_t level_lo = 0, level_hi = 1;
  int h = 0;
  for (; h < height_cap && level_lo < level_hi; ++h) {
    for (auto v = level_lo; v < level_hi; ++v) {
      const std::int64_t k = law.sample(rng);
      total += k;
      if (total > cap) throw SizeCapExceeded(cap);
      counts.push_back(static_cast<vid>(k));
    }
    level_lo = level_hi;
    level_hi = total;
  }
  return {total, level_lo < level_hi && h == height_cap};
}

}  // namespace detail

inline PlaneTree sample_gw(const OffspringLaw& law, int height_cap, long long size_cap, Rng& rng) {
  if (height_cap < 0) throw InvalidArgument("height cap must be >= 0");
  const vid cap = detail::checked_cap(size_cap);
  std::vector<vid> counts;
  std::int64_t total = 0;
  bool reached = false;
  try {
    std::tie(total, reached) = detail::gw_counts(law, height_cap, cap, rng, counts);
  } catch (const SizeCapExceeded&) {
    throw SizeCapExceeded(size_cap);
  }
  counts.resize(static_cast<std::size_t>(total), 0);
  return PlaneTree::from_child_counts(counts, reached ? std::optional<int>(height_cap) : std::nullopt);
}

/// First `height` generations of the tree conditioned to survive: spine
/// vertices reproduce by `biased` (the size-biased law of `law`) and pass the
/// spine to a uniformly chosen child; all other vertices reproduce by `law`.
inline PlaneTree sample_kesten(const OffspringLaw& law, const OffspringLaw& biased, int height, long long size_cap,
                               Rng& rng) {
  if (height < 0) throw InvalidArgument("height must be >= 0");
  const vid cap = detail::checked_cap(size_cap);
  std::vector<vid> counts;
  std::vector<vid> spine{0};
  std::int64_t total = 1;
  std::int64_t level_lo = 0, level_hi = 1;
  for (int h = 0; h < height; ++h) {
    for (auto v = level_lo; v < level_hi; ++v) {
      const bool on_spine = spine.back() == v;
      const std::int64_t k = on_spine ? biased.sample(rng) : law.sample(rng);
      if (total + k > cap) throw SizeCapExceeded(size_cap);
      if (on_spine) spine.push_back(static_cast<vid>(total + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(k)))));
      total += k;
      counts.push_back(static_cast<vid>(k));
    }
    level_lo = level_hi;
    level_hi = total;
  }
  counts.resize(static_cast<std::size_t>(total), 0);
  return PlaneTree::from_child_counts(counts, height, std::move(spine));
}

inline PlaneTree sample_kesten(const OffspringLaw& law, int height, long long size_cap, Rng& rng) {
  return sample_kesten(law, size_biased(law), height, size_cap, rng);
}

/// Subtree of `tree` rooted at `root`, in breadth-first order.
inline PlaneTree subtree(const PlaneTree& tree, vid root) {
  std::vector<vid> counts;
  vid lo = root, hi = root + 1;
  while (lo < hi) {
    for (vid v = lo; v < hi; ++v) counts.push_back(tree.child_count(v));
    const vid next_lo = tree.first_child(lo);
    const vid next_hi = tree.first_child(hi - 1) + tree.child_count(hi - 1);
    lo = next_lo;
    hi = next_hi;
  }
  std::optional<int> trunc;
  if (tree.truncated_at()) {
    const int rel = *tree.truncated_at() - tree.height(root);
    // keep the flag only if this subtree actually reaches the cap
    const auto probe = PlaneTree::from_child_counts(counts);
    if (probe.max_height() == rel) trunc = rel;
  }
  return PlaneTree::from_child_counts(counts, trunc);
}

/// The forest obtained by deleting the spine vertex at generation n0 and its
/// descendants: the subtrees rooted at the other generation-n0 vertices,
/// starting immediately right of the spine and wrapping around to its left.
inline std::vector<PlaneTree> spine_forest(const PlaneTree& tree, int n0) {
  if (!tree.has_spine()) throw InvalidArgument("spine_forest needs a tree with a spine");
  if (n0 < 0 || static_cast<std::size_t>(n0) >= tree.spine().size())
    throw InvalidArgument("n0 beyond the sampled spine");
  const vid begin = tree.level_begin(n0);
  const vid size = tree.level_size(n0);
  const vid spine_pos = tree.spine()[n0] - begin;
  std::vector<PlaneTree> out;
  out.reserve(static_cast<std::size_t>(size > 0 ? size - 1 : 0));
  for (vid i = 1; i < size; ++i) out.push_back(subtree(tree, begin + (spine_pos + i) % size));
  return out;
}

/// Number of vertices per generation; length max height + 1.
inline std::vector<std::int64_t> generation_sizes(const PlaneTree& tree) {
  std::vector<std::int64_t> out(static_cast<std::size_t>(tree.max_height()) + 1);
  for (int h = 0; h <= tree.max_height(); ++h) out[h] = tree.level_size(h);
  return out;
}

/// Breadth-first child counts, space separated.
inline std::string encode(const PlaneTree& tree) {
  std::string out;
  out.reserve(static_cast<std::size_t>(tree.size()) * 2);
  for (vid v = 0; v < tree.size(); ++v) {
    if (v) out.push_back(' ');
    out += std::to_string(tree.child_count(v));
  }
  return out;
}

inline PlaneTree decode(std::string_view code) {
  std::vector<vid> counts;
  std::size_t i = 0;
  while (i < code.size()) {
    while (i < code.size() && (code[i] == ' ' || code[i] == '\t' || code[i] == '\n' || code[i] == '\r')) ++i;
    if (i >= code.size()) break;
    vid value = 0;
    const auto [ptr, ec] = std::from_chars(code.data() + i, code.data() + code.size(), value);
    if (ec != std::errc{} || value < 0) throw InvalidArgument("tree code has a malformed entry");
    i = static_cast<std::size_t>(ptr - code.data());
    if (i < code.size() && !(code[i] == ' ' || code[i] == '\t' || code[i] == '\n' || code[i] == '\r'))
      throw InvalidArgument("tree code has a malformed entry");
    counts.push_back(value);
  }
  return PlaneTree::from_child_counts(counts);
}

}  // namespace clab
