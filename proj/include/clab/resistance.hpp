#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "clab/causal_map.hpp"
#include "clab/error.hpp"
#include "clab/graph.hpp"
#include "clab/rng.hpp"
#include "clab/stats.hpp"
#include "clab/tree.hpp"

namespace clab {

/// Effective resistance between the root and level r, with its bounds.
struct ResistanceResult {
  int r = 0;
  double exact = 0.0;
  double nash_williams_lower = 0.0;
  double flow_energy_upper = 0.0;
  int iterations = 0;
  double residual = 0.0;  ///< relative residual of the final iterate
};

namespace detail {

inline void check_resistance_args(const CausalMap& m, int r) {
  if (r < 0) throw InvalidArgument("r must be >= 0");
  if (m.max_height() < r) throw InvalidArgument("map has no level r");
}

struct PotentialSolve {
  double value = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

// Jacobi-preconditioned conjugate gradients on the grounded Laplacian. The
// unknowns are the vertices below level r, which are a prefix of the ids; the
// level-r vertices are merged into the grounded sink, so an edge into them
// only contributes to the diagonal.
inline PotentialSolve solve_root_potential(const CausalMap& m, int r, double tol) {
  PotentialSolve out;
  const vid n = m.level_begin(r);
  if (n == 0) return out;
  const auto un = static_cast<std::size_t>(n);
  std::vector<std::int64_t> first(un + 1, 0);
  std::vector<vid> adj;
  adj.reserve(un * 4);
  std::vector<double> inv_diag(un), x(un, 0.0), res(un, 0.0), p(un), q(un);
  for (vid v = 0; v < n; ++v) {
    inv_diag[v] = 1.0 / static_cast<double>(m.neighbors(v).size());
    for (auto w : m.neighbors(v))
      if (w < n) adj.push_back(w);
    first[v + 1] = static_cast<std::int64_t>(adj.size());
  }
  const auto root = static_cast<std::size_t>(m.root());
  res[root] = 1.0;  // the right-hand side has unit norm
  p[root] = inv_diag[root];
  double rz = inv_diag[root];
  out.residual = 1.0;
  const int cap = static_cast<int>(std::ceil(50.0 * std::sqrt(static_cast<double>(n))));
  while (out.residual > tol) {
    if (out.iterations >= cap)
      throw SolverNotConverged("residual " + std::to_string(out.residual) + " after " + std::to_string(cap) +
                               " iterations");
    double pq = 0.0;
    for (std::size_t v = 0; v < un; ++v) {
      double acc = p[v] / inv_diag[v];
      for (auto k = first[v]; k < first[v + 1]; ++k) acc -= p[static_cast<std::size_t>(adj[k])];
      q[v] = acc;
      pq += p[v] * acc;
    }
    const double alpha = rz / pq;
    double rz_next = 0.0, rr = 0.0;
    for (std::size_t v = 0; v < un; ++v) {
      x[v] += alpha * p[v];
      res[v] -= alpha * q[v];
      rz_next += res[v] * res[v] * inv_diag[v];
      rr += res[v] * res[v];
    }
    const double beta = rz_next / rz;
    for (std::size_t v = 0; v < un; ++v) p[v] = res[v] * inv_diag[v] + beta * p[v];
    rz = rz_next;
    ++out.iterations;
    out.residual = std::sqrt(rr);
  }
  out.value = x[root];
  return out;
}

}  // namespace detail

/// Resistance between the root and level r with level r merged into one
/// vertex, which equals the resistance to the boundary of the ball in the
/// whole map. Unit conductance on every edge.
inline ResistanceResult effective_resistance(const CausalMap& m, int r, double tol = 1e-10) {
  detail::check_resistance_args(m, r);
  const auto s = detail::solve_root_potential(m, r, tol);
  ResistanceResult out;
  out.r = r;
  out.exact = s.value;
  out.iterations = s.iterations;
  out.residual = s.residual;
  return out;
}

/// Sum over k = 1..r of 1 / (number of edges joining levels k-1 and k).
inline double nash_williams_lower(const CausalMap& m, int r) {
  detail::check_resistance_args(m, r);
  std::vector<long long> cut(static_cast<std::size_t>(r) + 1, 0);
  for (const auto& e : m.edges()) {
    const int hu = m.height(e.u), hv = m.height(e.v);
    if (hu != hv && std::max(hu, hv) <= r) ++cut[static_cast<std::size_t>(std::max(hu, hv))];
  }
  double sum = 0.0;
  for (int k = 1; k <= r; ++k) sum += 1.0 / static_cast<double>(cut[static_cast<std::size_t>(k)]);
  return sum;
}

namespace detail {

// Heights 0, 1, 2, 4, ... capped at r.
inline std::vector<int> dyadic_levels(int r) {
  std::vector<int> out{0};
  for (int h = 1; h < r; h *= 2) out.push_back(h);
  if (r > 0) out.push_back(r);
  return out;
}

}  // namespace detail

/// Energy of an explicit unit flow from the root to level r.
///
/// Heights are split at 1, 2, 4, ... . Within each annulus the flow is spread
/// evenly over a maximum family of edge-disjoint crossings, found with unit
/// capacities and the horizontal edges of the two boundary levels removed.
/// At each boundary level the mismatch between arriving and departing flow
/// is carried along that level's horizontal edges; on a cycle the circulation
/// is chosen with zero mean, which minimises its energy.
inline double flow_energy_upper(const CausalMap& m, int r) {
  detail::check_resistance_args(m, r);
  if (r == 0) return 0.0;
  std::vector<double> flow(static_cast<std::size_t>(m.edge_count()), 0.0);
  std::vector<double> arriving{1.0};  // at the root
  const auto levels = detail::dyadic_levels(r);
  for (std::size_t j = 0; j + 1 < levels.size(); ++j) {
    const int a = levels[j], c = levels[j + 1];
    const vid base = m.level_begin(a), top = m.level_end(c);
    FlowNetwork net(top - base + 2);
    const std::int32_t src = top - base, snk = src + 1;
    std::vector<std::int32_t> arc_of, edge_of;
    for (std::int32_t e = 0; e < m.edge_count(); ++e) {
      const auto& ed = m.edges()[static_cast<std::size_t>(e)];
      const int hu = m.height(ed.u), hv = m.height(ed.v);
      if (hu < a || hv < a || hu > c || hv > c) continue;
      if (ed.kind == EdgeKind::horizontal && (hu == a || hu == c)) continue;
      arc_of.push_back(net.add_undirected(ed.u - base, ed.v - base));
      edge_of.push_back(e);
    }
    const std::int64_t big = static_cast<std::int64_t>(m.edge_count()) + 1;
    std::vector<std::int32_t> out_arc, in_arc;
    for (vid v = m.level_begin(a); v < m.level_end(a); ++v) out_arc.push_back(net.add_arc(src, v - base, big));
    for (vid v = m.level_begin(c); v < m.level_end(c); ++v) in_arc.push_back(net.add_arc(v - base, snk, big));
    const auto k = net.max_flow(src, snk);
    if (k == 0) throw NoCrossing("no crossing between levels " + std::to_string(a) + " and " + std::to_string(c));
    const double unit = 1.0 / static_cast<double>(k);
    for (std::size_t i = 0; i < arc_of.size(); ++i)
      flow[static_cast<std::size_t>(edge_of[i])] += unit * static_cast<double>(net.flow(arc_of[i]));

    // reroute along level a: divergence is arriving minus departing
    const auto s = out_arc.size();
    std::vector<double> cum(s);
    double acc = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
      acc += arriving[i] - unit * static_cast<double>(net.flow(out_arc[i]));
      cum[i] = acc;
    }
    const vid lo = m.level_begin(a);
    const bool cycle = s >= 3 && m.right_edge(lo + static_cast<vid>(s) - 1) >= 0;
    double shift = 0.0;
    if (cycle) {
      for (double x : cum) shift += x;
      shift /= static_cast<double>(s);
    }
    for (std::size_t i = 0; i < s; ++i) {
      const auto e = m.right_edge(lo + static_cast<vid>(i));
      if (e >= 0) flow[static_cast<std::size_t>(e)] += cum[i] - shift;
    }

    arriving.assign(in_arc.size(), 0.0);
    for (std::size_t i = 0; i < in_arc.size(); ++i) arriving[i] = unit * static_cast<double>(net.flow(in_arc[i]));
  }
  double energy = 0.0;
  for (double f : flow) energy += f * f;
  return energy;
}

/// Exact value and both bounds at radius r.
inline ResistanceResult resistance_at(const CausalMap& m, int r, double tol = 1e-10) {
  auto out = effective_resistance(m, r, tol);
  out.nash_williams_lower = nash_williams_lower(m, r);
  out.flow_energy_upper = flow_energy_upper(m, r);
  return out;
}

struct ResistanceSample {
  int replication = 0;
  std::uint64_t seed = 0;
  bool censored = false;  ///< the tree hit the size cap
  std::vector<ResistanceResult> results;  ///< one per radius
};

struct ResistanceGrowth {
  std::vector<int> radii;
  std::vector<ResistanceSample> samples;
  stats::LineFit fit;     ///< log-log fit of the median exact value
  stats::LineFit nw_fit;  ///< median lower bound against log r
  int censored = 0;
};

/// Replication `index` of a run seeded with `master`: one Kesten tree of
/// height max(radii), measured at every radius.
inline ResistanceSample sample_resistance(const OffspringLaw& law, const OffspringLaw& biased,
                                          const std::vector<int>& radii, std::uint64_t master, int index,
                                          long long size_cap, MapVariant variant = MapVariant::causal) {
  ResistanceSample s;
  s.replication = index;
  s.seed = mix_seed(master, static_cast<std::uint64_t>(index));
  int top = 0;
  for (int r : radii) top = std::max(top, r);
  Rng rng(s.seed);
  try {
    const auto m = build_map(sample_kesten(law, biased, top, size_cap, rng), variant);
    for (int r : radii) s.results.push_back(resistance_at(m, r));
  } catch (const SizeCapExceeded&) {
    s.censored = true;
  }
  return s;
}

/// Resistance at each radius over independent replications, with the fitted
/// growth exponent. Censored replications are listed but left out of the fits.
inline ResistanceGrowth resistance_growth(const OffspringLaw& law, const std::vector<int>& radii, int replications,
                                          std::uint64_t master, long long size_cap,
                                          MapVariant variant = MapVariant::causal) {
  if (radii.size() < 3) throw InvalidArgument("need at least three radii");
  if (replications < 1) throw InvalidArgument("replications must be >= 1");
  for (int r : radii)
    if (r < 1) throw InvalidArgument("radii must be >= 1");
  ResistanceGrowth out;
  out.radii = radii;
  const auto biased = size_biased(law);
  std::vector<std::vector<double>> exact, lower;
  for (int i = 0; i < replications; ++i) {
    out.samples.push_back(sample_resistance(law, biased, radii, master, i, size_cap, variant));
    const auto& s = out.samples.back();
    if (s.censored) {
      ++out.censored;
      continue;
    }
    exact.emplace_back();
    lower.emplace_back();
    for (const auto& res : s.results) {
      exact.back().push_back(res.exact);
      lower.back().push_back(res.nash_williams_lower);
    }
  }
  if (exact.empty()) throw DegenerateInput("every replication was censored");
  std::vector<double> xs(radii.begin(), radii.end()), logs, nw;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    std::vector<double> col;
    for (const auto& row : lower) col.push_back(row[j]);
    nw.push_back(stats::median(col));
    logs.push_back(std::log(xs[j]));
  }
  Rng boot(mix_seed(master, 0xb007));
  out.fit = stats::fit_loglog_replicated(xs, exact, boot);
  out.nw_fit = stats::fit_line(logs, nw);
  return out;
}

}  // namespace clab
