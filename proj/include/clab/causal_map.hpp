#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "clab/error.hpp"
#include "clab/graph.hpp"
#include "clab/tree.hpp"

namespace clab {

enum class Mode { cyclic, linear };
enum class MapVariant { causal, cautrig, carpet };
enum class EdgeKind : std::uint8_t { vertical, horizontal, diagonal, apex };

inline std::string_view to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::vertical: return "vertical";
    case EdgeKind::horizontal: return "horizontal";
    case EdgeKind::diagonal: return "diagonal";
    case EdgeKind::apex: return "apex";
  }
  return "?";
}

/// Undirected edge. Vertical, diagonal and apex edges are stored lower end
/// first; horizontal edges are stored (left, right), the cyclic closing edge
/// as (last, first).
struct Edge {
  vid u;
  vid v;
  EdgeKind kind;
};

/// Layered planar graph built from a plane tree or an ordered forest.
///
/// Vertex ids are breadth-first: level h occupies [level_begin(h), level_end(h))
/// in left-to-right order, trees of a forest side by side. The adjacency lists
/// are stored in clockwise rotation order, so faces can be traced.
class CausalMap {
 public:
  vid size() const { return static_cast<vid>(height_.size()); }
  std::int32_t edge_count() const { return static_cast<std::int32_t>(edges_.size()); }
  int max_height() const { return static_cast<int>(level_begin_.size()) - 2; }
  int height(vid v) const { return height_[v]; }
  vid level_begin(int h) const { return h > max_height() ? size() : level_begin_[std::max(h, 0)]; }
  vid level_end(int h) const { return h > max_height() ? size() : level_begin_[h + 1]; }
  vid level_size(int h) const { return h < 0 ? 0 : level_end(h) - level_begin(h); }

  vid root() const { return 0; }
  std::int32_t tree_count() const { return tree_count_; }
  std::int32_t tree_of(vid v) const { return tree_of_[v]; }
  /// Tree parent; -1 for roots and the apex.
  vid parent(vid v) const { return parent_[v]; }
  vid first_child(vid v) const { return child_begin_[v]; }
  vid child_count(vid v) const { return child_count_[v]; }

  std::optional<vid> apex() const { return apex_; }
  Mode mode() const { return mode_; }
  MapVariant variant() const { return variant_; }
  std::optional<int> truncated_at() const { return truncated_at_; }

  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(std::int32_t e) const { return edges_[e]; }
  const Csr& graph() const { return graph_; }
  std::int32_t degree(vid v) const { return graph_.degree(v); }
  std::span<const vid> neighbors(vid v) const { return graph_.neighbors(v); }

  /// Horizontal edge from v to its right neighbour, or -1.
  std::int32_t right_edge(vid v) const { return right_edge_[v]; }

 private:
  friend class MapBuilder;

  std::vector<int> height_;
  std::vector<vid> level_begin_;
  std::vector<std::int32_t> tree_of_;
  std::vector<vid> parent_, child_begin_, child_count_;
  std::int32_t tree_count_ = 1;
  std::optional<vid> apex_;
  Mode mode_ = Mode::cyclic;
  MapVariant variant_ = MapVariant::causal;
  std::optional<int> truncated_at_;
  std::vector<Edge> edges_;
  Csr graph_;
  std::vector<std::int32_t> right_edge_;
};

/// Assembles a CausalMap from a breadth-first forest layout.
class MapBuilder {
 public:
  struct Options {
    Mode mode = Mode::cyclic;
    bool carpet = false;
    bool triangulate = false;
    bool apex = false;
  };

  static CausalMap from_tree(const PlaneTree& t, Options opt) {
    CausalMap m;
    const vid n = t.size();
    m.height_.assign(t.heights().begin(), t.heights().end());
    m.parent_.assign(t.parents().begin(), t.parents().end());
    m.child_count_.assign(t.child_counts().begin(), t.child_counts().end());
    m.child_begin_.resize(static_cast<std::size_t>(n));
    for (vid v = 0; v < n; ++v) m.child_begin_[v] = t.first_child(v);
    m.tree_of_.assign(static_cast<std::size_t>(n), 0);
    m.level_begin_.resize(static_cast<std::size_t>(t.max_height()) + 2);
    for (int h = 0; h <= t.max_height() + 1; ++h) m.level_begin_[h] = t.level_begin(h);
    m.tree_count_ = 1;
    m.truncated_at_ = t.truncated_at();
    finish(m, opt);
    return m;
  }

  static CausalMap from_forest(std::span<const PlaneTree> forest, Options opt) {
    if (forest.empty()) throw InvalidArgument("forest is empty");
    CausalMap m;
    int hmax = 0;
    std::int64_t total = 0;
    for (const auto& t : forest) {
      hmax = std::max(hmax, t.max_height());
      total += t.size();
      if (t.truncated_at()) m.truncated_at_ = std::max(m.truncated_at_.value_or(0), *t.truncated_at());
    }
    if (total > 0x7ffffff0LL) throw SizeCapExceeded(total);
    const auto n = static_cast<std::size_t>(total);
    m.height_.resize(n);
    m.parent_.resize(n);
    m.child_begin_.resize(n);
    m.child_count_.resize(n);
    m.tree_of_.resize(n);
    m.level_begin_.assign(static_cast<std::size_t>(hmax) + 2, 0);
    m.tree_count_ = static_cast<std::int32_t>(forest.size());
    // offset[t] = forest id of tree t's first vertex at the current level
    std::vector<std::int32_t> active(forest.size());
    for (std::size_t t = 0; t < forest.size(); ++t) active[t] = static_cast<std::int32_t>(t);
    std::vector<vid> offset(forest.size()), next_offset(forest.size());
    vid cursor = 0;
    for (int h = 0; h <= hmax; ++h) {
      m.level_begin_[h] = cursor;
      for (auto t : active) {
        offset[t] = cursor;
        cursor += forest[t].level_size(h);
      }
      std::vector<std::int32_t> next_active;
      vid next_cursor = cursor;
      for (auto t : active) {
        const PlaneTree& tr = forest[t];
        if (tr.level_size(h + 1) > 0) {
          next_offset[t] = next_cursor;
          next_cursor += tr.level_size(h + 1);
          next_active.push_back(t);
        }
      }
      for (auto t : active) {
        const PlaneTree& tr = forest[t];
        const vid base = tr.level_begin(h);
        const vid child_base = tr.level_begin(h + 1);
        for (vid v = base; v < tr.level_end(h); ++v) {
          const vid id = offset[t] + (v - base);
          m.height_[id] = h;
          m.tree_of_[id] = t;
          m.parent_[id] = h == 0 ? -1 : m.parent_[id];
          m.child_count_[id] = tr.child_count(v);
          m.child_begin_[id] = tr.child_count(v) > 0 ? next_offset[t] + (tr.first_child(v) - child_base) : 0;
          for (vid j = 0; j < tr.child_count(v); ++j) m.parent_[m.child_begin_[id] + j] = id;
        }
      }
      active.swap(next_active);
    }
    m.level_begin_[hmax + 1] = cursor;
    // childless vertices point past the last child of their left neighbour
    for (vid v = 0; v < cursor; ++v)
      if (m.child_count_[v] == 0) m.child_begin_[v] = v == 0 ? m.level_begin(1) : m.child_begin_[v - 1] + m.child_count_[v - 1];
    finish(m, opt);
    return m;
  }

 private:
  enum Slot : std::uint8_t { kUp, kRight, kDownRight, kParent, kDownLeft, kLeft };

  struct Dart {
    Slot slot;
    std::int64_t seq;
    vid to;
    std::int32_t edge;
  };

  struct Work {
    std::vector<Edge> edges;
    std::vector<Slot> slot_u, slot_v;
    std::vector<std::int64_t> seq_u, seq_v;
    std::int64_t counter = 0;

    void add(vid u, vid v, EdgeKind kind, Slot su, Slot sv) {
      edges.push_back({u, v, kind});
      slot_u.push_back(su);
      slot_v.push_back(sv);
      seq_u.push_back(counter);
      seq_v.push_back(counter);
      ++counter;
    }
  };

  static void finish(CausalMap& m, Options opt) {
    if (opt.triangulate && opt.mode != Mode::cyclic) throw InvalidArgument("triangulation needs cyclic levels");
    if (opt.apex && m.truncated_at_) throw InvalidArgument("apex requested on a truncated tree");
    m.mode_ = opt.mode;
    m.variant_ = opt.triangulate ? MapVariant::cautrig : opt.carpet ? MapVariant::carpet : MapVariant::causal;
    const vid n = m.size();
    const int hmax = m.max_height();
    Work w;
    w.edges.reserve(static_cast<std::size_t>(n) * (opt.triangulate ? 3 : 2));
    m.right_edge_.assign(static_cast<std::size_t>(n) + (opt.apex ? 1 : 0), -1);
    for (int h = 0; h <= hmax; ++h) {
      const vid lo = m.level_begin(h), hi = m.level_end(h), s = hi - lo;
      if (h > 0) {
        for (vid c = lo; c < hi; ++c) {
          const vid p = m.parent_[c];
          if (opt.carpet) {
            const bool extreme = c == m.child_begin_[p] || c == m.child_begin_[p] + m.child_count_[p] - 1;
            if (!extreme) continue;
          }
          w.add(p, c, EdgeKind::vertical, kUp, kParent);
        }
      }
      for (vid j = lo; j + 1 < hi; ++j) {
        m.right_edge_[j] = static_cast<std::int32_t>(w.edges.size());
        w.add(j, j + 1, EdgeKind::horizontal, kRight, kLeft);
      }
      if (opt.mode == Mode::cyclic && s >= 3) {
        m.right_edge_[hi - 1] = static_cast<std::int32_t>(w.edges.size());
        w.add(hi - 1, lo, EdgeKind::horizontal, kRight, kLeft);
      }
      if (opt.triangulate && h > 0) add_diagonals(m, w, h);
    }
    if (opt.apex) {
      const vid a = n;
      m.apex_ = a;
      m.height_.push_back(hmax + 1);
      m.tree_of_.push_back(0);
      m.parent_.push_back(-1);
      m.child_begin_.push_back(n);
      m.child_count_.push_back(0);
      const vid lo = m.level_begin(hmax), hi = m.level_end(hmax);
      for (vid t = lo; t < hi; ++t) {
        w.add(t, a, EdgeKind::apex, kUp, kUp);
        w.seq_v.back() = -static_cast<std::int64_t>(t);  // decreasing around the apex
      }
    }
    assemble(m, w);
  }

  // Triangulates the faces of the strip between levels h-1 and h from their
  // top-right corners.
  static void add_diagonals(CausalMap& m, Work& w, int h) {
    const vid lo = m.level_begin(h), hi = m.level_end(h);
    const vid blo = m.level_begin(h - 1), s = m.level_size(h - 1);
    if (hi == lo) return;
    auto pos = [&](vid v) { return v - blo; };
    auto at = [&](vid p) { return blo + ((p % s) + s) % s; };
    for (vid c = lo; c + 1 < hi; ++c) {
      const vid pk = pos(m.parent_[c]), pk1 = pos(m.parent_[c + 1]);
      for (vid q = pk1 - 1; q >= pk && pk != pk1; --q) w.add(at(q), c + 1, EdgeKind::diagonal, kUp, kDownLeft);
    }
    const vid first = lo, last = hi - 1;
    const vid pf = pos(m.parent_[first]), pl = pos(m.parent_[last]);
    if (pf != pl) {
      for (vid q = pf - 1; at(q) != at(pl - 1); --q) w.add(at(q), first, EdgeKind::diagonal, kUp, kDownLeft);
    } else if (s >= 2) {
      // a single parent at level h-1: close the face on both sides of it
      if (last != first) w.add(at(pf + 1), last, EdgeKind::diagonal, kUp, kDownRight);
      for (vid q = pf - 1; at(q) != at(pf); --q) w.add(at(q), first, EdgeKind::diagonal, kUp, kDownLeft);
    }
  }

  static void assemble(CausalMap& m, Work& w) {
    const vid n = static_cast<vid>(m.height_.size());
    Csr& g = m.graph_;
    g.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
    for (const auto& e : w.edges) {
      ++g.offsets[e.u + 1];
      ++g.offsets[e.v + 1];
    }
    for (vid v = 0; v < n; ++v) g.offsets[v + 1] += g.offsets[v];
    std::vector<Dart> darts(static_cast<std::size_t>(g.offsets[n]));
    std::vector<std::int64_t> fill(g.offsets.begin(), g.offsets.end() - 1);
    for (std::size_t i = 0; i < w.edges.size(); ++i) {
      const auto& e = w.edges[i];
      darts[fill[e.u]++] = {w.slot_u[i], w.seq_u[i], e.v, static_cast<std::int32_t>(i)};
      darts[fill[e.v]++] = {w.slot_v[i], w.seq_v[i], e.u, static_cast<std::int32_t>(i)};
    }
    g.targets.resize(darts.size());
    g.edges.resize(darts.size());
    for (vid v = 0; v < n; ++v) {
      auto b = darts.begin() + g.offsets[v], e = darts.begin() + g.offsets[v + 1];
      std::sort(b, e, [](const Dart& x, const Dart& y) { return x.slot != y.slot ? x.slot < y.slot : x.seq < y.seq; });
      for (auto i = g.offsets[v]; i < g.offsets[v + 1]; ++i) {
        g.targets[i] = darts[i].to;
        g.edges[i] = darts[i].edge;
      }
    }
    m.edges_ = std::move(w.edges);
  }
};

inline CausalMap build_causal(const PlaneTree& tree, Mode mode = Mode::cyclic) {
  return MapBuilder::from_tree(tree, {.mode = mode});
}

/// Trees placed left to right with linear levels running across tree boundaries.
inline CausalMap build_causal_forest(std::span<const PlaneTree> forest) {
  return MapBuilder::from_forest(forest, {.mode = Mode::linear});
}

inline CausalMap build_cautrig(const PlaneTree& tree, bool add_apex) {
  return MapBuilder::from_tree(tree, {.mode = Mode::cyclic, .triangulate = true, .apex = add_apex});
}

/// Causal map keeping only the leftmost and rightmost child edge of each vertex.
inline CausalMap build_carpet(const PlaneTree& tree, Mode mode = Mode::cyclic) {
  return MapBuilder::from_tree(tree, {.mode = mode, .carpet = true});
}

inline CausalMap build_map(const PlaneTree& tree, MapVariant variant) {
  switch (variant) {
    case MapVariant::causal: return build_causal(tree);
    case MapVariant::cautrig: return build_cautrig(tree, false);
    case MapVariant::carpet: return build_carpet(tree);
  }
  return build_causal(tree);
}

/// Lengths of the faces of the embedding given by the rotation system.
inline std::vector<std::int64_t> face_lengths(const CausalMap& m) {
  const Csr& g = m.graph();
  const auto darts = static_cast<std::size_t>(g.offsets.back());
  if (darts == 0) return {0};  // a lone vertex bounds one empty face
  // dart index of the reverse of each dart
  std::vector<std::int64_t> first_dart(static_cast<std::size_t>(m.edge_count()), -1);
  std::vector<std::int64_t> rev(darts);
  for (vid v = 0; v < m.size(); ++v) {
    for (auto i = g.offsets[v]; i < g.offsets[v + 1]; ++i) {
      auto& f = first_dart[g.edges[i]];
      if (f < 0) {
        f = i;
      } else {
        rev[i] = f;
        rev[f] = i;
      }
    }
  }
  std::vector<vid> owner(darts);
  for (vid v = 0; v < m.size(); ++v)
    for (auto i = g.offsets[v]; i < g.offsets[v + 1]; ++i) owner[i] = v;
  std::vector<bool> seen(darts, false);
  std::vector<std::int64_t> out;
  for (std::size_t start = 0; start < darts; ++start) {
    if (seen[start]) continue;
    std::int64_t len = 0;
    auto i = static_cast<std::int64_t>(start);
    while (!seen[i]) {
      seen[i] = true;
      ++len;
      const auto r = rev[i];
      const vid w = owner[r];
      // next dart: clockwise successor of the reverse dart around its tail
      i = r + 1 == g.offsets[w + 1] ? g.offsets[w] : r + 1;
    }
    out.push_back(len);
  }
  return out;
}

/// Checks the structural invariants shared by every constructor; returns an
/// empty string when they hold, otherwise a description of the first failure.
inline std::string check_invariants(const CausalMap& m) {
  std::unordered_set<std::uint64_t> seen;
  for (std::int32_t e = 0; e < m.edge_count(); ++e) {
    const auto& ed = m.edge(e);
    if (ed.u == ed.v) return "self-loop at " + std::to_string(ed.u);
    const auto a = static_cast<std::uint64_t>(std::min(ed.u, ed.v)), b = static_cast<std::uint64_t>(std::max(ed.u, ed.v));
    if (!seen.insert(a << 32 | b).second) return "parallel edge " + std::to_string(a) + "-" + std::to_string(b);
    const int dh = std::abs(m.height(ed.u) - m.height(ed.v));
    if (dh != (ed.kind == EdgeKind::horizontal ? 0 : 1)) return "bad height step on edge " + std::to_string(e);
  }
  const auto dist = bfs_distances(m.graph(), std::vector<vid>{0});
  if (std::any_of(dist.begin(), dist.end(), [](int d) { return d < 0; })) return "graph is disconnected";
  if (m.variant() != MapVariant::carpet) {
    std::vector<int> down(static_cast<std::size_t>(m.size()), 0);
    for (const auto& ed : m.edges())
      if (ed.kind == EdgeKind::vertical) ++down[ed.v];
    for (vid v = 0; v < m.size(); ++v) {
      const bool root = m.parent(v) < 0;
      if (down[v] != (root ? 0 : 1)) return "vertex " + std::to_string(v) + " has a wrong vertical edge count";
    }
  }
  if (m.mode() == Mode::cyclic) {
    std::vector<vid> horiz(static_cast<std::size_t>(m.max_height()) + 2, 0);
    for (const auto& ed : m.edges())
      if (ed.kind == EdgeKind::horizontal) ++horiz[m.height(ed.u)];
    for (int h = 0; h <= m.max_height(); ++h) {
      const vid s = m.level_size(h);
      const vid want = s >= 3 ? s : s == 2 ? 1 : 0;
      if (horiz[h] != want) return "level " + std::to_string(h) + " has a wrong horizontal edge count";
    }
  }
  return {};
}

/// Edge list CSV: edge_id,kind,u,v,height_u,height_v
inline void write_edges_csv(std::ostream& os, const CausalMap& m) {
  os << "edge_id,kind,u,v,height_u,height_v\n";
  for (std::int32_t e = 0; e < m.edge_count(); ++e) {
    const auto& ed = m.edge(e);
    os << e << ',' << to_string(ed.kind) << ',' << ed.u << ',' << ed.v << ',' << m.height(ed.u) << ','
       << m.height(ed.v) << '\n';
  }
}

/// Vertex table CSV: vertex,height,tree,parent,degree
inline void write_vertices_csv(std::ostream& os, const CausalMap& m) {
  os << "vertex,height,tree,parent,degree\n";
  for (vid v = 0; v < m.size(); ++v)
    os << v << ',' << m.height(v) << ',' << m.tree_of(v) << ',' << m.parent(v) << ',' << m.degree(v) << '\n';
}

}  // namespace clab
