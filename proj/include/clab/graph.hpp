#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "clab/error.hpp"

namespace clab {

/// Compressed adjacency: the neighbours of v are targets[offsets[v] .. offsets[v+1])
/// and edges[i] is the undirected edge id carried by dart i.
struct Csr {
  std::vector<std::int64_t> offsets{0};
  std::vector<std::int32_t> targets;
  std::vector<std::int32_t> edges;

  std::int32_t size() const { return static_cast<std::int32_t>(offsets.size()) - 1; }
  std::int32_t degree(std::int32_t v) const { return static_cast<std::int32_t>(offsets[v + 1] - offsets[v]); }
  std::span<const std::int32_t> neighbors(std::int32_t v) const {
    return {targets.data() + offsets[v], static_cast<std::size_t>(offsets[v + 1] - offsets[v])};
  }
  std::span<const std::int32_t> incident(std::int32_t v) const {
    return {edges.data() + offsets[v], static_cast<std::size_t>(offsets[v + 1] - offsets[v])};
  }
};

/// Builds a Csr from an undirected edge list; neighbour order follows edge order.
inline Csr make_csr(std::int32_t n, std::span<const std::pair<std::int32_t, std::int32_t>> edges) {
  Csr g;
  g.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  for (const auto& [u, v] : edges) {
    ++g.offsets[u + 1];
    ++g.offsets[v + 1];
  }
  for (std::int32_t v = 0; v < n; ++v) g.offsets[v + 1] += g.offsets[v];
  g.targets.resize(static_cast<std::size_t>(g.offsets[n]));
  g.edges.resize(g.targets.size());
  std::vector<std::int64_t> fill(g.offsets.begin(), g.offsets.end() - 1);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [u, v] = edges[e];
    g.targets[fill[u]] = v;
    g.edges[fill[u]++] = static_cast<std::int32_t>(e);
    g.targets[fill[v]] = u;
    g.edges[fill[v]++] = static_cast<std::int32_t>(e);
  }
  return g;
}

/// Reusable breadth-first search state. Resetting costs the number of
/// vertices touched by the previous search, so many small searches on a large
/// graph stay cheap.
class Bfs {
 public:
  static constexpr int kUnseen = -1;

  explicit Bfs(std::int32_t n) : dist_(static_cast<std::size_t>(n), kUnseen) { queue_.reserve(1024); }

  /// Runs from `sources` over vertices accepted by `allow`, stopping once
  /// every vertex at distance `max_dist` is labelled or `stop(v)` returns true
  /// for a dequeued vertex. Returns the vertex that triggered the stop, or -1.
  template <class Allow, class Stop>
  std::int32_t run(const Csr& g, std::span<const std::int32_t> sources, Allow&& allow, Stop&& stop,
                   int max_dist = std::numeric_limits<int>::max()) {
    clear();
    for (auto s : sources) {
      if (dist_[s] == kUnseen) {
        dist_[s] = 0;
        queue_.push_back(s);
      }
    }
    for (std::size_t head = 0; head < queue_.size(); ++head) {
      const std::int32_t v = queue_[head];
      if (stop(v)) return v;
      const int d = dist_[v];
      if (d >= max_dist) continue;
      for (auto w : g.neighbors(v)) {
        if (dist_[w] != kUnseen || !allow(w)) continue;
        dist_[w] = d + 1;
        queue_.push_back(w);
      }
    }
    return -1;
  }

  template <class Allow>
  void run(const Csr& g, std::span<const std::int32_t> sources, Allow&& allow,
           int max_dist = std::numeric_limits<int>::max()) {
    run(g, sources, allow, [](std::int32_t) { return false; }, max_dist);
  }

  void run(const Csr& g, std::span<const std::int32_t> sources) {
    run(g, sources, [](std::int32_t) { return true; });
  }

  int dist(std::int32_t v) const { return dist_[v]; }
  std::span<const int> distances() const { return dist_; }

  /// Vertices reached by the last search, in order of discovery.
  std::span<const std::int32_t> visited() const { return queue_; }

 private:
  void clear() {
    for (auto v : queue_) dist_[v] = kUnseen;
    queue_.clear();
  }

  std::vector<int> dist_;
  std::vector<std::int32_t> queue_;
};

/// Distances from `sources` in the whole graph; -1 where unreachable.
inline std::vector<int> bfs_distances(const Csr& g, std::span<const std::int32_t> sources) {
  Bfs bfs(g.size());
  bfs.run(g, sources);
  return {bfs.distances().begin(), bfs.distances().end()};
}

/// Dinic's algorithm on an integer-capacity network.
///
/// Arcs come in pairs: arc 2i and its reverse 2i+1. An undirected edge is a
/// pair of arcs that are each other's reverse, both carrying the capacity.
class FlowNetwork {
 public:
  explicit FlowNetwork(std::int32_t n) : n_(n) {}

  std::int32_t add_node() { return n_++; }
  std::int32_t size() const { return n_; }

  std::int32_t add_arc(std::int32_t u, std::int32_t v, std::int64_t cap) { return add_pair(u, v, cap, 0); }
  std::int32_t add_undirected(std::int32_t u, std::int32_t v, std::int64_t cap = 1) { return add_pair(u, v, cap, cap); }

  std::int64_t max_flow(std::int32_t s, std::int32_t t) {
    if (s == t) throw InvalidArgument("max-flow source equals sink");
    build();
    std::int64_t total = 0;
    while (levels(s, t)) {
      std::copy(first_.begin(), first_.end() - 1, cursor_.begin());
      for (std::int64_t pushed; (pushed = augment(s, t)) > 0;) total += pushed;
    }
    return total;
  }

  /// Net flow along arc `a` (negative when the flow runs against it).
  std::int64_t flow(std::int32_t a) const { return cap_[a] - res_[a]; }

  /// Nodes on the source side of the final residual graph.
  std::vector<bool> source_side(std::int32_t s) const {
    std::vector<bool> seen(static_cast<std::size_t>(n_), false);
    std::vector<std::int32_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (auto i = first_[v]; i < first_[v + 1]; ++i) {
        const auto a = out_[i];
        if (res_[a] > 0 && !seen[head_[a]]) {
          seen[head_[a]] = true;
          stack.push_back(head_[a]);
        }
      }
    }
    return seen;
  }

 private:
  std::int32_t add_pair(std::int32_t u, std::int32_t v, std::int64_t cap_uv, std::int64_t cap_vu) {
    if (u < 0 || v < 0 || u >= n_ || v >= n_) throw InvalidArgument("flow arc endpoint out of range");
    const auto id = static_cast<std::int32_t>(head_.size());
    tail_.push_back(u);
    head_.push_back(v);
    cap_.push_back(cap_uv);
    tail_.push_back(v);
    head_.push_back(u);
    cap_.push_back(cap_vu);
    built_ = false;
    return id;
  }

  void build() {
    if (built_) return;
    first_.assign(static_cast<std::size_t>(n_) + 1, 0);
    for (auto t : tail_) ++first_[t + 1];
    for (std::int32_t v = 0; v < n_; ++v) first_[v + 1] += first_[v];
    out_.resize(tail_.size());
    std::vector<std::int64_t> fill(first_.begin(), first_.end() - 1);
    for (std::size_t a = 0; a < tail_.size(); ++a) out_[fill[tail_[a]]++] = static_cast<std::int32_t>(a);
    res_ = cap_;
    level_.assign(static_cast<std::size_t>(n_), -1);
    cursor_.assign(static_cast<std::size_t>(n_), 0);
    built_ = true;
  }

  bool levels(std::int32_t s, std::int32_t t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::vector<std::int32_t> queue{s};
    level_[s] = 0;
    for (std::size_t i = 0; i < queue.size(); ++i) {
      const auto v = queue[i];
      for (auto j = first_[v]; j < first_[v + 1]; ++j) {
        const auto a = out_[j];
        if (res_[a] > 0 && level_[head_[a]] < 0) {
          level_[head_[a]] = level_[v] + 1;
          queue.push_back(head_[a]);
        }
      }
    }
    return level_[t] >= 0;
  }

  // One augmenting path in the level graph, found by iterative DFS.
  std::int64_t augment(std::int32_t s, std::int32_t t) {
    path_.clear();
    std::int32_t v = s;
    while (true) {
      if (v == t) {
        std::int64_t push = std::numeric_limits<std::int64_t>::max();
        for (auto a : path_) push = std::min(push, res_[a]);
        for (auto a : path_) {
          res_[a] -= push;
          res_[a ^ 1] += push;
        }
        return push;
      }
      bool advanced = false;
      for (auto& j = cursor_[v]; j < first_[v + 1]; ++j) {
        const auto a = out_[j];
        const auto w = head_[a];
        if (res_[a] > 0 && level_[w] == level_[v] + 1) {
          path_.push_back(a);
          v = w;
          advanced = true;
          break;
        }
      }
      if (advanced) continue;
      // dead end: prune v from the level graph and retreat
      level_[v] = -1;
      if (path_.empty()) return 0;
      const auto a = path_.back();
      path_.pop_back();
      v = tail_[a];
      ++cursor_[v];
    }
  }

  std::int32_t n_;
  bool built_ = false;
  std::vector<std::int32_t> tail_, head_;
  std::vector<std::int64_t> cap_, res_;
  std::vector<std::int64_t> first_;
  std::vector<std::int32_t> out_;
  std::vector<int> level_;
  std::vector<std::int64_t> cursor_;
  std::vector<std::int32_t> path_;
};

}  // namespace clab
