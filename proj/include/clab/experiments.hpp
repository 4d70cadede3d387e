#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "clab/blocks.hpp"
#include "clab/causal_map.hpp"
#include "clab/error.hpp"
#include "clab/metric.hpp"
#include "clab/offspring.hpp"
#include "clab/resistance.hpp"
#include "clab/rng.hpp"
#include "clab/stats.hpp"
#include "clab/tree.hpp"
#include "clab/walk.hpp"

namespace clab {

using json = nlohmann::json;

enum class ExperimentKind {
  girth,
  width,
  dual_width,
  subadditive,
  resistance,
  walk,
  exponents,
  renorm_check,
  sample_tree,
  export_map
};

inline const std::vector<std::pair<ExperimentKind, std::string>>& experiment_names() {
  static const std::vector<std::pair<ExperimentKind, std::string>> names{
      {ExperimentKind::girth, "girth"},
      {ExperimentKind::width, "width"},
      {ExperimentKind::dual_width, "dual-width"},
      {ExperimentKind::subadditive, "subadditive"},
      {ExperimentKind::resistance, "resistance"},
      {ExperimentKind::walk, "walk"},
      {ExperimentKind::exponents, "exponents"},
      {ExperimentKind::renorm_check, "renorm-check"},
      {ExperimentKind::sample_tree, "sample-tree"},
      {ExperimentKind::export_map, "export-map"}};
  return names;
}

inline std::string to_string(ExperimentKind k) {
  for (const auto& [kind, name] : experiment_names())
    if (kind == k) return name;
  return "?";
}

inline ExperimentKind parse_kind(const std::string& s) {
  for (const auto& [kind, name] : experiment_names())
    if (name == s) return kind;
  throw ConfigError("unknown experiment '" + s + "'");
}

/// Everything an experiment needs; the JSON keys are the field names.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::girth;
  json law = "geometric";
  std::vector<int> radii;
  std::vector<std::int64_t> ns;  ///< subadditive: distance between trees 1 and n
  int replications = 1;
  std::uint64_t master_seed = 1;
  int height_cap = 0;
  long long size_cap = 1LL << 24;
  std::string out = ".";
  MapVariant variant = MapVariant::causal;

  int max_searches = std::numeric_limits<int>::max();
  double stop_fraction = 0.0;       ///< girth: stop once girth >= this * r (0 = off)
  double threshold_fraction = 0.05; ///< girth: reported P(girth >= this * r)
  double tol = 1e-10;
  int n_max = 1 << 15;              ///< walk: kernel time horizon; walks run n_max / 2 steps
  int walkers = 200;
  ScaleWindow window;
  double band_mass = 1e-11;
  bool tree_only = false;
  std::vector<int> shortcut_radii;
  std::int64_t shortcut_limit = 1 << 20;
  bool kesten = false;  ///< sample-tree: condition on survival to height_cap
  bool codes = false;   ///< sample-tree: also write tree codes
};

inline OffspringLaw parse_law(const json& j) {
  if (j.is_object() && j.contains("custom")) return OffspringLaw::custom(j.at("custom").get<std::vector<double>>());
  if (!j.is_string()) throw ConfigError("law must be a name or {\"custom\": [pmf]}");
  const auto s = j.get<std::string>();
  if (s == "geometric") return OffspringLaw::geometric();
  if (s == "poisson1") return OffspringLaw::poisson1();
  double alpha = 0.0, gamma = 0.0;
  char close = 0;
  if (std::sscanf(s.c_str(), "stable(%lf,%lf%c", &alpha, &gamma, &close) == 3 && close == ')')
    return OffspringLaw::stable(alpha, gamma);
  throw ConfigError("unknown law '" + s + "'");
}

inline std::string variant_name(MapVariant v) {
  switch (v) {
    case MapVariant::causal: return "causal";
    case MapVariant::cautrig: return "cautrig";
    case MapVariant::carpet: return "carpet";
  }
  return "?";
}

inline MapVariant parse_variant(const std::string& s) {
  if (s == "causal") return MapVariant::causal;
  if (s == "cautrig") return MapVariant::cautrig;
  if (s == "carpet") return MapVariant::carpet;
  throw ConfigError("unknown map variant '" + s + "'");
}

namespace detail {

template <class T>
void read(const json& j, const char* key, T& into) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace detail

/// Reads and validates a config; unknown keys are rejected.
inline ExperimentConfig parse_config(const json& j) {
  static const std::vector<std::string> keys{
      "experiment", "law",        "radii",   "ns",          "replications",   "master_seed",
      "height_cap", "size_cap",   "out",     "variant",     "max_searches",   "stop_fraction",
      "threshold_fraction",       "tol",     "n_max",       "walkers",        "fit_window",
      "band_mass",  "tree_only",  "shortcut_radii",         "shortcut_limit", "kesten",
      "codes"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError("unknown config key '" + k + "'");
  ExperimentConfig c;
  std::string kind, variant = "causal";
  detail::read(j, "experiment", kind);
  if (kind.empty()) throw ConfigError("config has no 'experiment'");
  c.kind = parse_kind(kind);
  if (j.contains("law")) c.law = j.at("law");
  detail::read(j, "radii", c.radii);
  detail::read(j, "ns", c.ns);
  detail::read(j, "replications", c.replications);
  detail::read(j, "master_seed", c.master_seed);
  detail::read(j, "height_cap", c.height_cap);
  detail::read(j, "size_cap", c.size_cap);
  detail::read(j, "out", c.out);
  detail::read(j, "variant", variant);
  c.variant = parse_variant(variant);
  detail::read(j, "max_searches", c.max_searches);
  detail::read(j, "stop_fraction", c.stop_fraction);
  detail::read(j, "threshold_fraction", c.threshold_fraction);
  detail::read(j, "tol", c.tol);
  detail::read(j, "n_max", c.n_max);
  detail::read(j, "walkers", c.walkers);
  if (j.contains("fit_window")) {
    std::vector<std::int64_t> w;
    detail::read(j, "fit_window", w);
    if (w.size() != 2) throw ConfigError("fit_window must be [lo, hi]");
    c.window = {w[0], w[1]};
  }
  detail::read(j, "band_mass", c.band_mass);
  detail::read(j, "tree_only", c.tree_only);
  detail::read(j, "shortcut_radii", c.shortcut_radii);
  detail::read(j, "shortcut_limit", c.shortcut_limit);
  detail::read(j, "kesten", c.kesten);
  detail::read(j, "codes", c.codes);
  return c;
}

/// Checks the fields the chosen experiment uses.
inline void validate(const ExperimentConfig& c) {
  if (c.replications < 1) throw ConfigError("replications must be >= 1");
  if (c.size_cap < 1) throw ConfigError("size_cap must be >= 1");
  try {
    parse_law(c.law);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  for (std::size_t i = 1; i < c.radii.size(); ++i)
    if (c.radii[i] <= c.radii[i - 1]) throw ConfigError("radii must be strictly increasing");
  for (std::size_t i = 1; i < c.ns.size(); ++i)
    if (c.ns[i] <= c.ns[i - 1]) throw ConfigError("ns must be strictly increasing");
  const bool needs_radii = c.kind == ExperimentKind::girth || c.kind == ExperimentKind::width ||
                           c.kind == ExperimentKind::dual_width || c.kind == ExperimentKind::resistance ||
                           c.kind == ExperimentKind::renorm_check || c.kind == ExperimentKind::exponents;
  if (needs_radii && c.radii.empty()) throw ConfigError("experiment needs 'radii'");
  if (!c.radii.empty() && c.radii.front() < 1) throw ConfigError("radii must be >= 1");
  if ((c.kind == ExperimentKind::resistance || c.kind == ExperimentKind::exponents) && c.radii.size() < 3)
    throw ConfigError("growth fits need at least three radii");
  if (c.kind == ExperimentKind::subadditive && (c.ns.empty() || c.ns.front() < 2))
    throw ConfigError("subadditive needs 'ns' >= 2");
  const bool walks = c.kind == ExperimentKind::walk || c.kind == ExperimentKind::exponents;
  if (walks) {
    if (c.height_cap < 2) throw ConfigError("walk experiments need height_cap >= 2");
    if (c.n_max < 2 * c.window.hi) throw ConfigError("n_max must be at least 2 * fit_window hi");
    if (c.window.lo < 1 || c.window.hi < 4 * c.window.lo) throw ConfigError("fit_window needs three dyadic scales");
    if (c.walkers < 1) throw ConfigError("walkers must be >= 1");
  }
  if ((c.kind == ExperimentKind::sample_tree || c.kind == ExperimentKind::export_map) && c.height_cap < 1)
    throw ConfigError("experiment needs height_cap >= 1");
  if (c.stop_fraction < 0.0 || c.threshold_fraction < 0.0) throw ConfigError("fractions must be >= 0");
  if (!(c.tol > 0.0)) throw ConfigError("tol must be > 0");
}

/// Output of one run: a canonical CSV plus a JSON summary.
struct ResultRecord {
  ExperimentKind kind = ExperimentKind::girth;
  std::string header;
  std::vector<std::string> rows;
  /// Further CSV tables by file stem, e.g. the shortcut checks of a subadditive run.
  std::vector<std::pair<std::string, std::pair<std::string, std::vector<std::string>>>> extra;
  json summary;
  int replications = 0;
  int censored = 0;
  int failed = 0;
  std::vector<std::string> errors;  ///< first few replication errors

  bool too_many_failures() const { return 10 * failed > replications; }
  std::string csv() const {
    std::string s = header + "\n";
    for (const auto& r : rows) s += r + "\n";
    return s;
  }
};

/// Worker count from CLAB_THREADS, else the hardware concurrency.
inline int thread_count() {
  if (const char* env = std::getenv("CLAB_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// fn(0) .. fn(count - 1) on a pool of threads, results in index order.
template <class F>
auto parallel_map(int count, F fn) -> std::vector<decltype(fn(0))> {
  std::vector<decltype(fn(0))> out(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i; (i = next++) < count;) out[static_cast<std::size_t>(i)] = fn(i);
  };
  const int workers = std::min(thread_count(), count);
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return out;
}

/// Shortest round-trip decimal form.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

namespace detail {

// A replication's rows, or why it has none.
struct Outcome {
  std::vector<std::string> rows;
  std::vector<std::string> extra_rows;
  bool censored = false;
  std::string error;
  bool ok() const { return !censored && error.empty(); }
};

template <class F>
void guarded(Outcome& o, F body) {
  try {
    body();
  } catch (const SizeCapExceeded&) {
    o.censored = true;
  } catch (const std::exception& e) {
    o.error = e.what();
  }
}

template <class... Ts>
std::string row(const Ts&... xs) {
  std::string s;
  auto put = [&s](const auto& x) {
    if (!s.empty()) s += ',';
    using T = std::decay_t<decltype(x)>;
    if constexpr (std::is_same_v<T, std::string>)
      s += x;
    else if constexpr (std::is_same_v<T, const char*>)
      s += x;
    else if constexpr (std::is_floating_point_v<T>)
      s += fmt(x);
    else
      s += std::to_string(x);
  };
  (put(xs), ...);
  return s;
}

template <class T>
void collect(ResultRecord& rec, const std::vector<T>& outcomes) {
  rec.replications = static_cast<int>(outcomes.size());
  for (const auto& o : outcomes) {
    const Outcome& b = o;
    rec.censored += b.censored;
    if (!b.error.empty()) {
      ++rec.failed;
      if (rec.errors.size() < 5) rec.errors.push_back(b.error);
    }
    rec.rows.insert(rec.rows.end(), b.rows.begin(), b.rows.end());
  }
}

inline json interval(const stats::Interval& i) { return json::array({i.lo, i.hi}); }

inline json fit_json(const stats::LineFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"slope_ci", interval(f.slope_ci)}};
}

inline std::uint64_t radius_seed(std::uint64_t master, int r) { return mix_seed(master, 0x7261646975730000ULL + r); }

inline bool is_probe(const ExperimentConfig& c) {
  return parse_law(c.law).name().rfind("stable", 0) == 0 || c.variant == MapVariant::carpet;
}

inline ResultRecord run_girth(const ExperimentConfig& c) {
  const auto law = parse_law(c.law);
  const auto biased = size_biased(law);
  const int per = c.replications;
  struct G : Outcome {
    int girth = 0;
    bool exact = true;
  };
  const auto outs = parallel_map(static_cast<int>(c.radii.size()) * per, [&](int k) {
    G o;
    const int r = c.radii[static_cast<std::size_t>(k / per)], i = k % per;
    guarded(o, [&] {
      const int stop = c.stop_fraction > 0.0 ? static_cast<int>(std::ceil(c.stop_fraction * r))
                                             : std::numeric_limits<int>::max();
      const auto g = sample_girth(law, biased, r, mix_seed(radius_seed(c.master_seed, r), static_cast<std::uint64_t>(i)),
                                  c.size_cap, c.max_searches, stop);
      o.girth = g.girth;
      o.exact = g.exact;
      o.rows.push_back(row(r, i, c.master_seed, g.girth, g.level_size, g.exact ? "exact" : "lower_bound"));
    });
    return o;
  });
  ResultRecord rec;
  rec.kind = ExperimentKind::girth;
  rec.header = "r,replication,seed,girth,level_size,exact_or_lower_bound";
  collect(rec, outs);
  json per_r = json::array();
  for (std::size_t j = 0; j < c.radii.size(); ++j) {
    const int r = c.radii[j];
    std::vector<double> ratio, logratio;
    int censored = 0, inexact = 0, above = 0;
    for (int i = 0; i < per; ++i) {
      const auto& o = outs[j * static_cast<std::size_t>(per) + static_cast<std::size_t>(i)];
      censored += o.censored;
      if (!o.ok()) continue;
      inexact += !o.exact;
      above += o.girth >= c.threshold_fraction * r;
      ratio.push_back(static_cast<double>(o.girth) / r);
      logratio.push_back(r > 1 ? std::log(std::max(o.girth, 1)) / std::log(static_cast<double>(r)) : 0.0);
    }
    json e = {{"r", r}, {"valid", ratio.size()}, {"censored", censored}, {"lower_bounds", inexact}};
    if (!ratio.empty()) {
      e["median_girth_over_r"] = stats::median(ratio);
      e["median_log_girth_over_log_r"] = stats::median(logratio);
      e["p_girth_at_least_threshold"] = static_cast<double>(above) / static_cast<double>(ratio.size());
    }
    per_r.push_back(e);
  }
  rec.summary = {{"threshold_fraction", c.threshold_fraction}, {"radii", per_r}};
  return rec;
}

inline ResultRecord run_width(const ExperimentConfig& c) {
  const auto law = parse_law(c.law);
  const int per = c.replications;
  struct W : Outcome {
    BlockSample s;
  };
  const auto outs = parallel_map(static_cast<int>(c.radii.size()) * per, [&](int k) {
    W o;
    const int r = c.radii[static_cast<std::size_t>(k / per)], i = k % per;
    guarded(o, [&] {
      o.s = sample_block(law, r, radius_seed(c.master_seed, r), i, c.size_cap);
      if (o.s.censored) {
        o.censored = true;
        return;
      }
      o.rows.push_back(row(r, i, c.master_seed, o.s.width, o.s.dual_width, o.s.xi));
    });
    return o;
  });
  ResultRecord rec;
  rec.kind = c.kind;
  rec.header = "r,replication,seed,width,dual_width,xi_r";
  collect(rec, outs);
  Rng boot(mix_seed(c.master_seed, 0xb007));
  const auto upper = [](std::vector<double> xs) { return stats::upper_median(std::move(xs)); };
  json per_r = json::array();
  for (std::size_t j = 0; j < c.radii.size(); ++j) {
    std::vector<double> w, g;
    for (int i = 0; i < per; ++i) {
      const auto& o = outs[j * static_cast<std::size_t>(per) + static_cast<std::size_t>(i)];
      if (!o.ok()) continue;
      w.push_back(o.s.width);
      g.push_back(o.s.dual_width);
    }
    json e = {{"r", c.radii[j]}, {"valid", w.size()}};
    if (!w.empty()) {
      e["f"] = upper(w);
      e["f_ci"] = interval(stats::bootstrap_ci(w, upper, boot));
      e["g"] = upper(g);
      e["g_ci"] = interval(stats::bootstrap_ci(g, upper, boot));
    }
    per_r.push_back(e);
  }
  rec.summary = {{"radii", per_r}};
  return rec;
}

inline ResultRecord run_subadditive(const ExperimentConfig& c) {
  const auto law = parse_law(c.law);
  struct S : Outcome {
    std::vector<double> per_n;
    int violations = 0;
  };
  const auto outs = parallel_map(c.replications, [&](int i) {
    S o;
    guarded(o, [&] {
      const TreeSequence seq(law, mix_seed(c.master_seed, static_cast<std::uint64_t>(i)), c.size_cap);
      for (auto n : c.ns) {
        const int d = left_right_distance(seq, 0, n - 1);
        o.per_n.push_back(static_cast<double>(d) / static_cast<double>(n));
        o.rows.push_back(row(n, i, c.master_seed, d, std::string(), std::string()));
      }
      for (int r : c.shortcut_radii) {
        const auto s = shortcut_check(seq, r, c.shortcut_limit);
        o.violations += !s.holds;
        o.extra_rows.push_back(row(r, i, c.master_seed, s.xi1, s.xi2, s.distance, s.holds ? 1 : 0));
      }
    });
    return o;
  });
  ResultRecord rec;
  rec.kind = ExperimentKind::subadditive;
  rec.header = "r,replication,seed,width,dual_width,xi_r";
  collect(rec, outs);
  std::vector<std::string> shortcut;
  int violations = 0;
  for (const auto& o : outs) {
    shortcut.insert(shortcut.end(), o.extra_rows.begin(), o.extra_rows.end());
    violations += o.violations;
  }
  if (!c.shortcut_radii.empty())
    rec.extra.push_back({"shortcut", {"r,replication,seed,xi1,xi2,distance,holds", shortcut}});
  Rng boot(mix_seed(c.master_seed, 0xb007));
  const auto mean = [](std::vector<double> xs) { return stats::mean(xs); };
  json per_n = json::array();
  for (std::size_t j = 0; j < c.ns.size(); ++j) {
    std::vector<double> xs;
    for (const auto& o : outs)
      if (o.ok()) xs.push_back(o.per_n[j]);
    json e = {{"n", c.ns[j]}, {"valid", xs.size()}};
    if (!xs.empty()) {
      e["mean_L_over_n"] = stats::mean(xs);
      e["ci"] = interval(stats::bootstrap_ci(xs, mean, boot));
    }
    per_n.push_back(e);
  }
  rec.summary = {{"ns", per_n}, {"shortcut_checks", shortcut.size()}, {"shortcut_violations", violations}};
  return rec;
}

inline ResultRecord run_resistance(const ExperimentConfig& c) {
  const auto law = parse_law(c.law);
  const auto biased = size_biased(law);
  struct R : Outcome {
    ResistanceSample s;
  };
  const auto outs = parallel_map(c.replications, [&](int i) {
    R o;
    guarded(o, [&] {
      o.s = sample_resistance(law, biased, c.radii, c.master_seed, i, c.size_cap, c.variant);
      o.censored = o.s.censored;
      for (const auto& x : o.s.results)
        o.rows.push_back(row(x.r, i, c.master_seed, x.exact, x.nash_williams_lower, x.flow_energy_upper, x.iterations,
                             x.residual));
    });
    return o;
  });
  ResultRecord rec;
  rec.kind = ExperimentKind::resistance;
  rec.header = "r,replication,seed,exact,nw_lower,flow_upper,iters,residual";
  collect(rec, outs);
  std::vector<std::vector<double>> exact;
  std::vector<double> xs(c.radii.begin(), c.radii.end()), logs, nw(c.radii.size(), 0.0);
  std::vector<std::vector<double>> lower(c.radii.size());
  for (const auto& o : outs) {
    if (!o.ok()) continue;
    exact.emplace_back();
    for (std::size_t j = 0; j < o.s.results.size(); ++j) {
      exact.back().push_back(o.s.results[j].exact);
      lower[j].push_back(o.s.results[j].nash_williams_lower);
    }
  }
  json s = {{"valid", exact.size()}};
  if (!exact.empty()) {
    for (std::size_t j = 0; j < xs.size(); ++j) {
      nw[j] = stats::median(lower[j]);
      logs.push_back(std::log(xs[j]));
    }
    Rng boot(mix_seed(c.master_seed, 0xb007));
    s["resistance_exponent"] = fit_json(stats::fit_loglog_replicated(xs, exact, boot));
    s["nash_williams_vs_log_r"] = fit_json(stats::fit_line(logs, nw));
  }
  if (is_probe(c)) s["note"] = "conjecture probe";
  rec.summary = s;
  return rec;
}

// One map (or bare tree) per replication for the walk pipelines.
struct WalkOutcome : Outcome {
  KernelSeries kernel;
  double ds = 0.0, nu = 0.0;
  std::vector<double> final_displacement;
  std::vector<double> volumes;
  std::vector<double> resistance;
};

inline void walk_replication(const ExperimentConfig& c, const OffspringLaw& law, const OffspringLaw& biased, int i,
                             bool growth, WalkOutcome& o) {
  const int top = std::max(c.height_cap, c.radii.empty() ? 0 : c.radii.back());
  Rng rng = seed_stream(c.master_seed, static_cast<std::uint64_t>(i));
  const auto tree = sample_kesten(law, biased, top, c.size_cap, rng);
  Csr tree_graph;
  std::optional<CausalMap> map;
  LayeredGraph g;
  if (c.tree_only) {
    tree_graph = tree_csr(tree);
    g = layered(tree_graph, tree);
  } else {
    map.emplace(build_map(tree, c.variant));
    g = layered(*map);
  }
  if (growth) {
    const auto vols = ball_volumes(*map, c.radii.back());
    for (int r : c.radii) {
      o.volumes.push_back(static_cast<double>(vols[static_cast<std::size_t>(r)]));
      o.resistance.push_back(effective_resistance(*map, r, c.tol).exact);
    }
  }
  o.kernel = exact_kernel(g, c.n_max, c.band_mass);
  const auto walks = mc_walk(g, c.n_max / 2, c.walkers, rng.derive(0x77616c6b));
  o.ds = estimate_ds(o.kernel, c.window).slope;
  o.nu = estimate_nu(walks, c.window).slope;
  o.final_displacement.assign(walks.displacement.back().begin(), walks.displacement.back().end());
  for (std::size_t j = 1; j < walks.checkpoints.size(); ++j) {
    const auto n = walks.checkpoints[j];
    if (n > c.n_max / 2 || (n & (n - 1)) != 0) continue;
    const auto t = static_cast<std::size_t>(2 * n);
    o.rows.push_back(row(n, i, c.master_seed, o.kernel.p_return[t], o.kernel.width[t], walks.median_displacement(j)));
  }
}

inline json walk_summary(const ExperimentConfig& c, const std::vector<WalkOutcome>& outs) {
  std::vector<double> ds, nu;
  std::vector<KernelSeries> kernels;
  for (const auto& o : outs) {
    if (!o.ok()) continue;
    ds.push_back(o.ds);
    nu.push_back(o.nu);
    kernels.push_back(o.kernel);
  }
  json s = {{"valid", ds.size()}, {"fit_window", json::array({c.window.lo, c.window.hi})}};
  if (ds.empty()) return s;
  Rng boot(mix_seed(c.master_seed, 0xb007));
  const auto med = [](std::vector<double> xs) { return stats::median(std::move(xs)); };
  s["quenched_ds"] = stats::median(ds);
  s["quenched_ds_ci"] = interval(stats::bootstrap_ci(ds, med, boot));
  s["quenched_nu"] = stats::median(nu);
  s["quenched_nu_ci"] = interval(stats::bootstrap_ci(nu, med, boot));
  try {
    s["annealed_ds"] = estimate_ds(average_kernels(kernels), c.window).slope;
  } catch (const BracketTooWide& e) {
    s["annealed_ds_error"] = e.what();
  }
  return s;
}

inline ResultRecord run_walk(const ExperimentConfig& c) {
  const auto law = parse_law(c.law);
  const auto biased = size_biased(law);
  const auto outs = parallel_map(c.replications, [&](int i) {
    WalkOutcome o;
    guarded(o, [&] { walk_replication(c, law, biased, i, false, o); });
    return o;
  });
  ResultRecord rec;
  rec.kind = ExperimentKind::walk;
  rec.header = "n,replication,seed,p_return_lower,escape_mass,median_disp";
  collect(rec, outs);
  rec.summary = walk_summary(c, outs);
  rec.summary["graph"] = c.tree_only ? "tree" : variant_name(c.variant);
  return rec;
}

/// Volume growth, resistance growth, spectral dimension and displacement on
/// the same maps, with the two exponent relations.
inline ResultRecord run_exponents(const ExperimentConfig& c) {
  if (c.tree_only) throw ConfigError("exponents needs a map, not tree_only");
  const auto law = parse_law(c.law);
  const auto biased = size_biased(law);
  const auto outs = parallel_map(c.replications, [&](int i) {
    WalkOutcome o;
    guarded(o, [&] { walk_replication(c, law, biased, i, true, o); });
    return o;
  });
  ResultRecord rec;
  rec.kind = ExperimentKind::exponents;
  rec.header = "n,replication,seed,p_return_lower,escape_mass,median_disp";
  collect(rec, outs);
  auto s = walk_summary(c, outs);
  std::vector<std::vector<double>> vols, res;
  std::vector<std::string> growth;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const auto& o = outs[i];
    if (!o.ok()) continue;
    vols.push_back(o.volumes);
    res.push_back(o.resistance);
    for (std::size_t j = 0; j < c.radii.size(); ++j)
      growth.push_back(row(c.radii[j], static_cast<int>(i), c.master_seed, o.volumes[j], o.resistance[j]));
  }
  rec.extra.push_back({"growth", {"r,replication,seed,volume,resistance", growth}});
  if (!vols.empty()) {
    const std::vector<double> xs(c.radii.begin(), c.radii.end());
    Rng boot(mix_seed(c.master_seed, 0xf17));
    const auto g = stats::fit_loglog_replicated(xs, vols, boot);
    const auto rr = stats::fit_loglog_replicated(xs, res, boot);
    const double ds = s["quenched_ds"], nu = s["quenched_nu"];
    s["volume_exponent"] = fit_json(g);
    s["resistance_exponent"] = fit_json(rr);
    s["ds_minus_2g_over_g_plus_r"] = ds - 2.0 * g.slope / (g.slope + rr.slope);
    s["ds_minus_2_nu_g"] = ds - 2.0 * nu * g.slope;
  }
  rec.summary = s;
  return rec;
}

inline ResultRecord run_renorm(const ExperimentConfig& c) {
  const auto check = renorm_check(parse_law(c.law), c.radii, c.replications, c.master_seed, c.size_cap);
  ResultRecord rec;
  rec.kind = ExperimentKind::renorm_check;
  rec.replications = c.replications;
  rec.header = "r,m,replications,seed,f_r,f_m,bound,holds";
  for (std::size_t i = 0; i < check.radii.size(); ++i)
    rec.rows.push_back(row(check.radii[i], check.radii[i] / 4, c.replications, c.master_seed, check.f[i], check.f_m[i],
                           check.bound[i], check.holds[i] ? 1 : 0));
  rec.summary = {{"c_hat", check.c_hat},
                 {"all_hold", std::all_of(check.holds.begin(), check.holds.end(), [](bool b) { return b; })}};
  return rec;
}

inline ResultRecord run_sample_tree(const ExperimentConfig& c) {
  const auto law = parse_law(c.law);
  const auto biased = size_biased(law);
  struct T : Outcome {
    std::string code;
    double size = 0.0;
  };
  const auto outs = parallel_map(c.replications, [&](int i) {
    T o;
    guarded(o, [&] {
      Rng rng = seed_stream(c.master_seed, static_cast<std::uint64_t>(i));
      const auto t = c.kesten ? sample_kesten(law, biased, c.height_cap, c.size_cap, rng)
                              : sample_gw(law, c.height_cap, c.size_cap, rng);
      o.size = t.size();
      o.rows.push_back(row(i, c.master_seed, t.size(), t.max_height(), t.truncated_at() ? 1 : 0));
      if (c.codes) o.extra_rows.push_back(encode(t));
    });
    return o;
  });
  ResultRecord rec;
  rec.kind = ExperimentKind::sample_tree;
  rec.header = "replication,seed,size,height,truncated";
  collect(rec, outs);
  std::vector<std::string> codes;
  std::vector<double> sizes;
  for (const auto& o : outs) {
    if (!o.ok()) continue;
    codes.insert(codes.end(), o.extra_rows.begin(), o.extra_rows.end());
    sizes.push_back(o.size);
  }
  if (c.codes) rec.extra.push_back({"codes", {"", codes}});
  rec.summary = {{"law", law.name()}, {"valid", sizes.size()}};
  if (!sizes.empty()) {
    rec.summary["mean_size"] = stats::mean(sizes);
    rec.summary["median_size"] = stats::median(sizes);
  }
  return rec;
}

inline ResultRecord run_export_map(const ExperimentConfig& c) {
  const auto law = parse_law(c.law);
  Rng rng = seed_stream(c.master_seed, 0);
  const auto map = build_map(sample_kesten(law, c.height_cap, c.size_cap, rng), c.variant);
  ResultRecord rec;
  rec.kind = ExperimentKind::export_map;
  rec.replications = 1;
  std::ostringstream edges, vertices;
  write_edges_csv(edges, map);
  write_vertices_csv(vertices, map);
  auto split = [](const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
  };
  auto e = split(edges.str()), v = split(vertices.str());
  rec.header = e.front();
  rec.rows.assign(e.begin() + 1, e.end());
  rec.extra.push_back({"vertices", {v.front(), std::vector<std::string>(v.begin() + 1, v.end())}});
  rec.summary = {{"vertices", map.size()}, {"edges", map.edge_count()}, {"height", map.max_height()}};
  return rec;
}

}  // namespace detail

/// Runs an experiment. Replications run in parallel and rows are emitted in
/// replication order, so the output depends on the config alone.
inline ResultRecord run(const ExperimentConfig& c) {
  validate(c);
  ResultRecord rec;
  switch (c.kind) {
    case ExperimentKind::girth: rec = detail::run_girth(c); break;
    case ExperimentKind::width:
    case ExperimentKind::dual_width: rec = detail::run_width(c); break;
    case ExperimentKind::subadditive: rec = detail::run_subadditive(c); break;
    case ExperimentKind::resistance: rec = detail::run_resistance(c); break;
    case ExperimentKind::walk: rec = detail::run_walk(c); break;
    case ExperimentKind::exponents: rec = detail::run_exponents(c); break;
    case ExperimentKind::renorm_check: rec = detail::run_renorm(c); break;
    case ExperimentKind::sample_tree: rec = detail::run_sample_tree(c); break;
    case ExperimentKind::export_map: rec = detail::run_export_map(c); break;
  }
  rec.summary["experiment"] = to_string(c.kind);
  rec.summary["law"] = parse_law(c.law).name();
  rec.summary["master_seed"] = c.master_seed;
  rec.summary["replications"] = rec.replications;
  rec.summary["censored"] = rec.censored;
  rec.summary["failed"] = rec.failed;
  if (!rec.errors.empty()) rec.summary["errors"] = rec.errors;
  return rec;
}

/// Writes <stem>.csv, any extra tables, and <stem>.json into `dir`.
inline void write_outputs(const ResultRecord& rec, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string stem = to_string(rec.kind);
  auto write_table = [&](const std::string& name, const std::string& header, const std::vector<std::string>& rows,
                         const char* ext) {
    std::ofstream f(fs::path(dir) / (name + ext), std::ios::binary);
    if (!header.empty()) f << header << '\n';
    for (const auto& r : rows) f << r << '\n';
    if (!f) throw Error("cannot write " + (fs::path(dir) / (name + ext)).string());
  };
  write_table(stem, rec.header, rec.rows, ".csv");
  for (const auto& [name, table] : rec.extra)
    write_table(stem + "_" + name, table.first, table.second, table.first.empty() ? ".txt" : ".csv");
  std::ofstream f(fs::path(dir) / (stem + ".json"), std::ios::binary);
  f << rec.summary.dump(2) << '\n';
}

}  // namespace clab
