#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "clab/causal_map.hpp"
#include "clab/error.hpp"
#include "clab/graph.hpp"
#include "clab/rng.hpp"
#include "clab/stats.hpp"
#include "clab/tree.hpp"

namespace clab {

/// Non-owning view of a connected graph whose vertex ids are sorted by
/// height: level h is [level_begin[h], level_begin[h + 1]). The top level
/// is the truncation boundary.
struct LayeredGraph {
  const Csr* graph = nullptr;
  std::vector<vid> level_begin;
  vid root = 0;

  vid size() const { return graph->size(); }
  int max_height() const { return static_cast<int>(level_begin.size()) - 2; }
  int height_of(vid v) const {
    return static_cast<int>(std::upper_bound(level_begin.begin(), level_begin.end(), v) - level_begin.begin()) - 1;
  }
  vid begin(int h) const { return h > max_height() ? size() : level_begin[static_cast<std::size_t>(h)]; }
};

namespace detail {

template <class Height>
std::vector<vid> level_starts(vid n, Height height) {
  std::vector<vid> out{0};
  for (vid v = 0; v < n; ++v) {
    if (v > 0 && height(v) < height(v - 1)) throw InvalidArgument("vertex ids are not sorted by height");
    while (static_cast<int>(out.size()) <= height(v)) out.push_back(v);
  }
  out.push_back(n);
  return out;
}

}  // namespace detail

inline LayeredGraph layered(const CausalMap& m) {
  return {&m.graph(), detail::level_starts(m.size(), [&](vid v) { return m.height(v); }), m.root()};
}

/// The tree's own edges, for walks on the tree without horizontal edges.
inline Csr tree_csr(const PlaneTree& t) {
  std::vector<std::pair<std::int32_t, std::int32_t>> edges;
  edges.reserve(static_cast<std::size_t>(t.size()));
  for (vid v = 1; v < t.size(); ++v) edges.emplace_back(t.parent(v), v);
  return make_csr(t.size(), edges);
}

/// `g` must be tree_csr(t).
inline LayeredGraph layered(const Csr& g, const PlaneTree& t) {
  return {&g, detail::level_starts(t.size(), [&](vid v) { return t.height(v); }), 0};
}

/// Distribution of the simple random walk, absorbed at the top level.
///
/// Only the levels below a moving window height are iterated. Mass that
/// reaches the window height is removed and counted as escaped, which keeps
/// every value a lower bound with a known deficit. The window is raised by
/// `band` levels whenever the mass in its top `band` levels exceeds
/// `band_mass`, and never beyond the top level.
class HeatKernel {
 public:
  HeatKernel(const LayeredGraph& g, vid source, int band = 8, double band_mass = 1e-20)
      : g_(g), band_(band), band_mass_(band_mass) {
    if (g.max_height() < 1) throw InvalidArgument("walk needs at least two levels");
    if (source < 0 || source >= g.size()) throw InvalidArgument("source out of range");
    if (band < 1) throw InvalidArgument("band must be >= 1");
    const auto n = static_cast<std::size_t>(g.size());
    deg_.resize(n);
    inv_deg_.resize(n);
    for (vid v = 0; v < g.size(); ++v) {
      const auto d = g.graph->degree(v);
      if (d == 0) throw InvalidArgument("isolated vertex");
      deg_[v] = static_cast<double>(d);
      inv_deg_[v] = 1.0 / deg_[v];
    }
    q_.assign(n, 0.0);
    prev_.assign(n, 0.0);
    window_ = std::min(g.max_height(), g.height_of(source) + band_);
    if (g.height_of(source) >= g.max_height()) {
      escaped_ = 1.0;  // starts on the absorbing level
    } else {
      q_[static_cast<std::size_t>(source)] = inv_deg_[source];
    }
  }

  void step() {
    grow();
    const vid inside = g_.begin(window_), edge = g_.begin(window_ + 1);
    const auto& csr = *g_.graph;
    for (vid v = 0; v < inside; ++v) {
      double acc = 0.0;
      for (auto w : csr.neighbors(v)) acc += q_[w];
      prev_[v] = acc * inv_deg_[v];
    }
    for (vid v = inside; v < edge; ++v) {
      for (auto w : csr.neighbors(v)) escaped_ += q_[w];
    }
    std::swap(q_, prev_);
    ++time_;
  }

  /// P^t(source, v) / deg(v) over [0, limit()); zero beyond.
  std::span<const double> scaled() const { return {q_.data(), static_cast<std::size_t>(limit())}; }
  /// The same one step earlier.
  std::span<const double> scaled_previous() const { return {prev_.data(), static_cast<std::size_t>(limit())}; }
  std::span<const double> degrees() const { return deg_; }

  double probability(vid v) const { return q_[v] * deg_[v]; }
  std::vector<double> distribution() const {
    std::vector<double> out(q_.size());
    for (std::size_t v = 0; v < q_.size(); ++v) out[v] = q_[v] * deg_[v];
    return out;
  }

  vid limit() const { return g_.begin(window_); }
  double escaped() const { return escaped_; }
  int window() const { return window_; }
  std::int64_t time() const { return time_; }

  double mass() const {
    double s = 0.0;
    for (vid v = 0; v < limit(); ++v) s += q_[v] * deg_[v];
    return s;
  }

 private:
  void grow() {
    while (window_ < g_.max_height()) {
      double top = 0.0;
      for (vid v = g_.begin(std::max(0, window_ - band_)); v < g_.begin(window_); ++v) top += q_[v] * deg_[v];
      if (top <= band_mass_) return;
      window_ = std::min(g_.max_height(), window_ + band_);
    }
  }

  const LayeredGraph& g_;
  int band_;
  double band_mass_;
  int window_ = 0;
  std::int64_t time_ = 0;
  double escaped_ = 0.0;
  std::vector<double> deg_, inv_deg_, q_, prev_;
};

/// Return probabilities of the walk absorbed at the top level, for t = 0..n_max.
struct KernelSeries {
  std::vector<double> p_return;  ///< absorbed-walk P^t(root, root), a lower bound
  std::vector<double> width;     ///< the unabsorbed value is within p_return[t] + width[t]
  std::vector<double> escaped;   ///< mass absorbed in the first s steps, s = 0..ceil(n_max / 2)
  int max_height = 0;
  int window = 0;  ///< highest absorbing height the iteration used

  int n_max() const { return static_cast<int>(p_return.size()) - 1; }
};

/// Exact kernel by repeated application of the transition operator.
///
/// Only ceil(n_max / 2) steps are taken: by reversibility
/// P^{a+b}(root, root) = sum_x P^a(root, x) P^b(root, x) deg(root) / deg(x),
/// and this holds for the absorbed walk as well. A returning path that meets
/// the absorbing set does so within its first a or its last b steps, so the
/// deficit at time a + b is at most escaped[a] + escaped[b].
inline KernelSeries exact_kernel(const LayeredGraph& g, int n_max, double band_mass = 1e-20) {
  if (n_max < 0) throw InvalidArgument("n_max must be >= 0");
  KernelSeries out;
  out.max_height = g.max_height();
  HeatKernel k(g, g.root, 8, band_mass);
  const double deg_root = static_cast<double>(g.graph->degree(g.root));
  out.p_return.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  out.width.assign(out.p_return.size(), 0.0);
  out.p_return[0] = k.escaped() > 0.0 ? 0.0 : 1.0;
  out.width[0] = k.escaped();
  out.escaped.push_back(k.escaped());
  for (int a = 0; 2 * a + 1 <= n_max; ++a) {
    k.step();
    out.escaped.push_back(k.escaped());
    const auto now = k.scaled();
    const auto before = k.scaled_previous();
    const auto deg = k.degrees();
    double odd = 0.0, even = 0.0;
    for (std::size_t v = 0; v < now.size(); ++v) {
      odd += before[v] * now[v] * deg[v];
      even += now[v] * now[v] * deg[v];
    }
    const auto t = static_cast<std::size_t>(2 * a + 1);
    out.p_return[t] = odd * deg_root;
    out.width[t] = out.escaped[a] + out.escaped[a + 1];
    if (t + 1 < out.p_return.size()) {
      out.p_return[t + 1] = even * deg_root;
      out.width[t + 1] = 2.0 * out.escaped[a + 1];
    }
  }
  out.window = k.window();
  return out;
}

/// P^n(source, .) without absorption; requires the source to stay more than
/// n levels below the top.
inline std::vector<double> transition_row(const LayeredGraph& g, vid source, int n) {
  if (n < 0) throw InvalidArgument("n must be >= 0");
  if (g.height_of(source) + n >= g.max_height()) throw InvalidArgument("graph too shallow for an unabsorbed kernel");
  HeatKernel k(g, source, g.max_height(), 0.0);
  for (int t = 0; t < n; ++t) k.step();
  return k.distribution();
}

namespace detail {

inline std::vector<std::int64_t> dyadic_checkpoints(std::int64_t n) {
  std::vector<std::int64_t> out{0};
  for (std::int64_t t = 1; t < n; t *= 2) out.push_back(t);
  if (n > 0) out.push_back(n);
  return out;
}

}  // namespace detail

/// Monte Carlo walks from the root.
struct WalkStats {
  std::vector<std::int64_t> checkpoints;
  std::vector<std::vector<int>> displacement;  ///< [checkpoint][kept walker], graph distance to the root
  std::vector<int> returned;                   ///< kept walkers back at the root by each checkpoint
  int walkers = 0;
  int flagged = 0;  ///< walkers that reached the top level, excluded

  double exclusion_rate() const { return walkers == 0 ? 0.0 : static_cast<double>(flagged) / walkers; }
  double median_displacement(std::size_t i) const {
    return stats::median(std::vector<double>(displacement[i].begin(), displacement[i].end()));
  }
};

/// Independent walkers from the root, each on its own stream derived from
/// `rng`. Displacement is the breadth-first distance to the root at dyadic
/// checkpoints and at `n_steps`.
inline WalkStats mc_walk(const LayeredGraph& g, std::int64_t n_steps, int walkers, const Rng& rng) {
  if (n_steps < 0) throw InvalidArgument("n_steps must be >= 0");
  if (walkers < 1) throw InvalidArgument("walkers must be >= 1");
  const auto& csr = *g.graph;
  const vid src[] = {g.root};
  const auto dist = bfs_distances(csr, src);
  const vid top = g.begin(g.max_height());
  WalkStats out;
  out.walkers = walkers;
  out.checkpoints = detail::dyadic_checkpoints(n_steps);
  const auto nc = out.checkpoints.size();
  out.displacement.resize(nc);
  out.returned.assign(nc, 0);
  std::vector<int> disp(nc);
  for (int i = 0; i < walkers; ++i) {
    Rng w = rng.derive(static_cast<std::uint64_t>(i));
    vid x = g.root;
    bool hit = false, back = false;
    std::size_t c = 0;
    std::vector<bool> back_at(nc, false);
    for (std::int64_t t = 0;; ++t) {
      while (c < nc && out.checkpoints[c] == t) {
        disp[c] = dist[x];
        back_at[c] = back;
        ++c;
      }
      if (t == n_steps) break;
      const auto nb = csr.neighbors(x);
      x = nb[w.below(nb.size())];
      back = back || x == g.root;
      if (x >= top) {
        hit = true;
        break;
      }
    }
    if (hit) {
      ++out.flagged;
      continue;
    }
    for (std::size_t j = 0; j < nc; ++j) {
      out.displacement[j].push_back(disp[j]);
      out.returned[j] += back_at[j];
    }
  }
  if (100 * out.flagged > walkers)
    throw ExcessiveBoundaryHits(std::to_string(out.flagged) + " of " + std::to_string(walkers) +
                                " walkers reached the top level");
  return out;
}

/// Dyadic fitting window for the exponent estimators.
struct ScaleWindow {
  std::int64_t lo = 1 << 8;
  std::int64_t hi = 1 << 14;
};

namespace detail {

inline std::vector<std::int64_t> dyadic_in(const ScaleWindow& w) {
  if (w.lo < 1 || w.hi < 4 * w.lo) throw InvalidArgument("fit window needs at least three dyadic scales");
  std::vector<std::int64_t> out;
  for (std::int64_t n = 1; n <= w.hi; n *= 2)
    if (n >= w.lo) out.push_back(n);
  return out;
}

}  // namespace detail

/// Slope of -2 log P^{2n}(root, root) against log n over dyadic n in the
/// window. Throws BracketTooWide when a bracket exceeds `rel_width` of the
/// value it brackets.
inline stats::LineFit estimate_ds(const KernelSeries& s, ScaleWindow w = {}, double rel_width = 1e-3) {
  std::vector<double> xs, ys;
  for (auto n : detail::dyadic_in(w)) {
    const auto t = static_cast<std::size_t>(2 * n);
    if (t >= s.p_return.size()) throw InvalidArgument("kernel series shorter than the fit window");
    if (!(s.p_return[t] > 0.0) || s.width[t] > rel_width * s.p_return[t])
      throw BracketTooWide("bracket at t = " + std::to_string(t) + " is " + std::to_string(s.width[t]));
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(-2.0 * std::log(s.p_return[t]));
  }
  return stats::fit_line(xs, ys);
}

/// Annealed variant: the kernel averaged over maps, with summed brackets
/// averaged the same way.
inline KernelSeries average_kernels(std::span<const KernelSeries> series) {
  if (series.empty()) throw InvalidArgument("no kernels to average");
  KernelSeries out = series.front();
  for (std::size_t i = 1; i < series.size(); ++i) {
    const auto& s = series[i];
    if (s.p_return.size() != out.p_return.size()) throw InvalidArgument("kernels of different lengths");
    for (std::size_t t = 0; t < s.p_return.size(); ++t) {
      out.p_return[t] += s.p_return[t];
      out.width[t] += s.width[t];
    }
    for (std::size_t t = 0; t < s.escaped.size(); ++t) out.escaped[t] += s.escaped[t];
  }
  const double k = static_cast<double>(series.size());
  for (auto& x : out.p_return) x /= k;
  for (auto& x : out.width) x /= k;
  for (auto& x : out.escaped) x /= k;
  return out;
}

/// Slope of log median displacement against log n over the dyadic
/// checkpoints in the window.
inline stats::LineFit estimate_nu(const WalkStats& s, ScaleWindow w = {}) {
  if (100 * s.flagged > s.walkers) throw ExcessiveBoundaryHits("too many walkers reached the top level");
  std::vector<double> xs, ys;
  for (auto n : detail::dyadic_in(w)) {
    const auto it = std::find(s.checkpoints.begin(), s.checkpoints.end(), n);
    if (it == s.checkpoints.end()) throw InvalidArgument("walk has no checkpoint at " + std::to_string(n));
    xs.push_back(static_cast<double>(n));
    ys.push_back(s.median_displacement(static_cast<std::size_t>(it - s.checkpoints.begin())));
  }
  return stats::fit_loglog(xs, ys);
}

struct VcReport {
  long long checks = 0;
  double worst_ratio = 0.0;  ///< largest P^n(root, x) / bound
  int n_max = 0;
};

/// Checks P^n(root, x) <= 2 sqrt(deg x / deg root) exp(-d(root, x)^2 / 2n)
/// for every n in 1..n_max and every x, with exact kernels and distances.
/// Throws InequalityViolated on the first failure.
inline VcReport vc_check(const LayeredGraph& g, int n_max) {
  if (n_max < 1) throw InvalidArgument("n_max must be >= 1");
  if (n_max >= g.max_height()) throw InvalidArgument("graph too shallow for an unabsorbed kernel");
  const auto& csr = *g.graph;
  const vid src[] = {g.root};
  const auto dist = bfs_distances(csr, src);
  const double deg_root = static_cast<double>(csr.degree(g.root));
  HeatKernel k(g, g.root, g.max_height(), 0.0);
  VcReport out;
  out.n_max = n_max;
  for (int n = 1; n <= n_max; ++n) {
    k.step();
    for (vid x = 0; x < k.limit(); ++x) {
      if (dist[x] > n_max) continue;
      const double d = dist[x];
      const double bound = 2.0 * std::sqrt(csr.degree(x) / deg_root) * std::exp(-d * d / (2.0 * n));
      ++out.checks;
      const double p = k.probability(x);
      out.worst_ratio = std::max(out.worst_ratio, p / bound);
      if (p > bound)
        throw InequalityViolated("P^" + std::to_string(n) + "(root, " + std::to_string(x) + ") = " +
                                 std::to_string(p) + " exceeds " + std::to_string(bound));
    }
  }
  return out;
}

}  // namespace clab
