#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "clab/causal_map.hpp"
#include "clab/error.hpp"
#include "clab/graph.hpp"
#include "clab/rng.hpp"

namespace clab {

/// Hop distances from a set of sources, valid up to `radius`.
struct DistanceField {
  std::vector<vid> sources;
  std::vector<int> dist;  ///< -1 beyond the radius or unreachable
  int radius = std::numeric_limits<int>::max();
};

inline DistanceField distance_field(const CausalMap& m, std::span<const vid> sources,
                                    int radius = std::numeric_limits<int>::max()) {
  DistanceField f;
  f.sources.assign(sources.begin(), sources.end());
  f.radius = radius;
  for (auto s : sources)
    if (s < 0 || s >= m.size()) throw InvalidArgument("source out of range");
  Bfs bfs(m.size());
  bfs.run(m.graph(), sources, [](vid) { return true; }, radius);
  f.dist.assign(bfs.distances().begin(), bfs.distances().end());
  return f;
}

inline int distance(const CausalMap& m, vid u, vid v) {
  if (u < 0 || v < 0 || u >= m.size() || v >= m.size()) throw InvalidArgument("vertex out of range");
  Bfs bfs(m.size());
  const vid src[] = {u};
  const vid hit = bfs.run(m.graph(), src, [](vid) { return true; }, [v](vid w) { return w == v; });
  if (hit < 0) throw Unreachable("no path between the vertices");
  return bfs.dist(hit);
}

/// #B_k(root) for k = 0..r, from one BFS.
inline std::vector<long long> ball_volumes(const CausalMap& m, int r) {
  if (r < 0) throw InvalidArgument("radius must be >= 0");
  Bfs bfs(m.size());
  const vid src[] = {m.root()};
  bfs.run(m.graph(), src, [](vid) { return true; }, r);
  std::vector<long long> out(static_cast<std::size_t>(r) + 1, 0);
  for (auto v : bfs.visited()) ++out[static_cast<std::size_t>(bfs.dist(v))];
  for (std::size_t k = 1; k < out.size(); ++k) out[k] += out[k - 1];
  return out;
}

inline long long ball_volume(const CausalMap& m, int r) { return ball_volumes(m, r).back(); }

struct GirthResult {
  int girth = 0;
  bool exact = true;  ///< false in lower-bound mode
  int level_size = 0;
  int searches = 0;   ///< breadth-first searches used
  int truncation = 0; ///< height of the map the value was computed in
};

namespace detail {

// Eccentricities within the level-r set, one BFS at a time. A path of length
// at most L between height-r vertices stays within heights r - L/2 .. r + L/2.
class LevelEccentricity {
 public:
  LevelEccentricity(const CausalMap& m, int r) : m_(m), r_(r), bfs_(m.size()) {
    for (vid v = m.level_begin(r); v < m.level_end(r); ++v) level_.push_back(v);
  }

  std::span<const vid> level() const { return level_; }

  // Trivial bound: through the root, or along the level.
  int bound() const {
    const int n = static_cast<int>(level_.size());
    const int along = m_.mode() == Mode::cyclic && n >= 3 ? n / 2 : n - 1;
    return std::min(2 * r_, along);
  }

  // Distances from level vertex `s` to every level vertex, given that none
  // exceeds `limit`; returns the largest.
  int run(vid s, int limit) {
    const vid src[] = {s};
    std::size_t seen = 0;
    const auto total = level_.size();
    const int lo = r_ - limit / 2, hi = r_ + limit / 2;
    bfs_.run(
        m_.graph(), src,
        [&](vid w) {
          const int h = m_.height(w);
          return h >= lo && h <= hi;
        },
        [&](vid w) { return m_.height(w) == r_ && ++seen == total; });
    if (seen != total) throw Unreachable("level-r vertices farther apart than the bound");
    int ecc = 0;
    for (auto v : level_) ecc = std::max(ecc, bfs_.dist(v));
    return ecc;
  }

  int dist(vid v) const { return bfs_.dist(v); }

 private:
  const CausalMap& m_;
  int r_;
  Bfs bfs_;
  std::vector<vid> level_;
};

inline void check_girth_args(const CausalMap& m, int r) {
  if (r < 0) throw InvalidArgument("r must be >= 0");
  if (m.max_height() < r) throw InvalidArgument("map has no level r");
  if (m.truncated_at() && m.max_height() < 3 * r) throw TruncationTooShallow("map truncated below height 3r");
}

inline GirthResult girth_in(const CausalMap& m, int r, int max_searches, int stop_at) {
  GirthResult out;
  out.truncation = m.max_height();
  LevelEccentricity ecc(m, r);
  const auto level = ecc.level();
  const auto n = level.size();
  out.level_size = static_cast<int>(n);
  if (n <= 1) return out;
  std::vector<int> lo(n, 0), hi(n, ecc.bound());
  std::vector<bool> done(n, false);
  int best = 0;
  bool pick_high = true;
  while (true) {
    std::size_t s = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i] || hi[i] <= best) continue;
      if (s == n || (pick_high ? hi[i] > hi[s] : lo[i] < lo[s])) s = i;
    }
    if (s == n) break;
    if (out.searches == max_searches || best >= stop_at) {
      out.exact = false;
      break;
    }
    pick_high = !pick_high;
    const int e = ecc.run(level[s], hi[s]);
    ++out.searches;
    done[s] = true;
    lo[s] = hi[s] = e;
    best = std::max(best, e);
    for (std::size_t i = 0; i < n; ++i) {
      const int d = ecc.dist(level[i]);
      lo[i] = std::max({lo[i], d, e - d});
      hi[i] = std::min(hi[i], e + d);
      best = std::max(best, lo[i]);
    }
  }
  out.girth = best;
  return out;
}

}  // namespace detail

/// Largest distance between two height-r vertices.
///
/// Eccentricities are bracketed with the triangle inequality after every
/// search, and sources alternate between the vertex with the largest upper
/// bound and the one with the smallest lower bound until the brackets close.
/// When `max_searches` runs out first, or the lower bound reaches `stop_at`,
/// the result is the best lower bound and is flagged as inexact.
inline GirthResult girth_at_height(const CausalMap& m, int r, int max_searches = std::numeric_limits<int>::max(),
                                   int stop_at = std::numeric_limits<int>::max()) {
  detail::check_girth_args(m, r);
  return detail::girth_in(m, r, max_searches, stop_at);
}

/// Girth at height r of the causal map of one Kesten tree drawn from `seed`.
///
/// A path leaving the truncation at r + k has length at least 2k + 2, so the
/// value computed at that truncation is exact when it is at most 2k + 1, and
/// min(value, 2k + 2) is a lower bound otherwise. The tree is regenerated from
/// the same seed with k doubled (at most r) until the value is certified.
/// `max_searches` and `stop_at` are passed on to girth_at_height.
inline GirthResult sample_girth(const OffspringLaw& law, const OffspringLaw& biased, int r, std::uint64_t seed,
                                long long size_cap, int max_searches = std::numeric_limits<int>::max(),
                                int stop_at = std::numeric_limits<int>::max()) {
  if (r < 0) throw InvalidArgument("r must be >= 0");
  for (int k = std::min(r, 8);; k = std::min(r, 2 * k)) {
    Rng rng(seed);
    const auto m = build_causal(sample_kesten(law, biased, r + k, size_cap, rng));
    auto g = detail::girth_in(m, r, max_searches, stop_at);
    g.truncation = r + k;
    if (g.girth <= 2 * k + 1 || k == r) return g;
    if (!g.exact) {
      g.girth = std::min(g.girth, 2 * k + 2);
      return g;
    }
  }
}

/// Lower bound on the girth at height r from the eccentricities of `sources`
/// uniformly chosen height-r vertices.
inline GirthResult girth_lower_bound(const CausalMap& m, int r, int sources, Rng& rng) {
  detail::check_girth_args(m, r);
  if (sources < 1) throw InvalidArgument("need at least one source");
  GirthResult out;
  out.exact = false;
  detail::LevelEccentricity ecc(m, r);
  const auto level = ecc.level();
  out.level_size = static_cast<int>(level.size());
  if (level.size() <= 1) {
    out.exact = true;
    return out;
  }
  for (int i = 0; i < sources; ++i) {
    out.girth = std::max(out.girth, ecc.run(level[rng.below(level.size())], ecc.bound()));
    ++out.searches;
  }
  return out;
}

}  // namespace clab
