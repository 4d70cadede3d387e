// Acceptance suite: one pass/fail line per criterion.
//
//   acceptance            run every criterion
//   acceptance 3 5 11     run the listed ones

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "clab/experiments.hpp"

using namespace clab;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (double x : xs) s += (s.empty() ? "" : " ") + fmt(std::round(x * 1e4) / 1e4);
  return s;
}

// Criterion 1: P(Height >= n) against 1 - f_n(0), f(s) = 1 / (2 - s).
Verdict kolmogorov_tail() {
  const auto law = OffspringLaw::geometric();
  const std::vector<int> ns{32, 64, 128, 256};
  const int samples = 1000000;
  std::vector<long long> reached(ns.size(), 0);
  Rng rng = seed_stream(101, 0);
  for (int i = 0; i < samples; ++i) {
    const auto t = sample_gw(law, ns.back(), 1 << 24, rng);
    for (std::size_t j = 0; j < ns.size(); ++j) reached[j] += t.level_size(ns[j]) > 0;
  }
  bool pass = true;
  std::vector<double> z;
  for (std::size_t j = 0; j < ns.size(); ++j) {
    double s = 0.0;
    for (int k = 0; k < ns[j]; ++k) s = 1.0 / (2.0 - s);
    const double p = 1.0 - s;
    const double se = std::sqrt(p * (1.0 - p) / samples);
    z.push_back((static_cast<double>(reached[j]) / samples - p) / se);
    pass = pass && std::abs(z.back()) <= 4.0;
  }
  return {pass, "z-scores at n = 32 64 128 256: " + join(z)};
}

// Criterion 2: shapes of the first two generations of the Kesten tree against
// mu-probabilities biased by the size of generation 2.
Verdict size_bias_identity() {
  const auto law = OffspringLaw::geometric();
  const auto bar = size_biased(law);
  auto mu = [](int k) { return std::ldexp(1.0, -(k + 1)); };
  std::map<std::vector<vid>, std::size_t> index;
  std::vector<double> probs;
  for (int k = 1; k <= 5; ++k) {
    std::vector<vid> kids(static_cast<std::size_t>(k), 0);
    while (true) {
      int total = 0;
      for (auto c : kids) total += c;
      if (total >= 1 && 1 + k + total <= 7) {
        std::vector<vid> code{static_cast<vid>(k)};
        code.insert(code.end(), kids.begin(), kids.end());
        double p = mu(k) * total;
        for (auto c : kids) p *= mu(c);
        index[code] = probs.size();
        probs.push_back(p);
      }
      std::size_t i = 0;
      while (i < kids.size() && kids[i] == 5) kids[i++] = 0;
      if (i == kids.size()) break;
      ++kids[i];
    }
  }
  double covered = 0.0;
  for (double p : probs) covered += p;
  probs.push_back(1.0 - covered);
  std::vector<long long> counts(probs.size(), 0);
  Rng rng = seed_stream(102, 0);
  for (int i = 0; i < 1000000; ++i) {
    const auto t = sample_kesten(law, bar, 2, 1 << 20, rng);
    const auto cc = t.child_counts();
    const std::vector<vid> code(cc.begin(), cc.begin() + 1 + cc[0]);
    const auto it = index.find(code);
    ++counts[it == index.end() ? probs.size() - 1 : it->second];
  }
  const auto chi = stats::chi_squared_test(counts, probs);
  return {chi.p_value > 0.01,
          "chi2 = " + fmt(chi.statistic) + ", dof = " + std::to_string(chi.dof) + ", p = " + fmt(chi.p_value)};
}

// Criterion 3
Verdict menger_equality() {
  Rng rng = seed_stream(103, 0);
  int mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    const int r = 1 + static_cast<int>(rng.below(20));
    const Block b = extract_block(OffspringLaw::geometric(), r, rng, 1 << 22);
    mismatches += dual_width_flow(b) != dual_width_crossing(b);
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in 200 blocks"};
}

// Criterion 4
Verdict resistance_sandwich() {
  const auto law = OffspringLaw::geometric();
  const auto bar = size_biased(law);
  const int r = 256;
  const auto outs = parallel_map(100, [&](int i) {
    Rng rng = seed_stream(104, static_cast<std::uint64_t>(i));
    const auto m = build_causal(sample_kesten(law, bar, r, 1 << 24, rng));
    return resistance_at(m, r);
  });
  int violations = 0;
  double worst_low = 1e300, worst_high = 1e300;
  for (const auto& x : outs) {
    violations += x.nash_williams_lower - 1e-8 > x.exact || x.exact > x.flow_energy_upper + 1e-8;
    worst_low = std::min(worst_low, x.exact - x.nash_williams_lower);
    worst_high = std::min(worst_high, x.flow_energy_upper - x.exact);
  }
  return {violations == 0, std::to_string(violations) + " violations in 100 maps; min gaps " + fmt(worst_low) + " / " +
                               fmt(worst_high)};
}

double dense_resistance(const CausalMap& m, int r) {
  std::vector<int> index(static_cast<std::size_t>(m.size()), -1);
  int n = 0;
  for (vid v = 0; v < m.size(); ++v)
    if (m.height(v) < r) index[v] = n++;
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : m.edges()) {
    if (m.height(e.u) > r || m.height(e.v) > r) continue;
    const int a = index[e.u], b = index[e.v];
    if (a >= 0) lap(a, a) += 1.0;
    if (b >= 0) lap(b, b) += 1.0;
    if (a >= 0 && b >= 0) {
      lap(a, b) -= 1.0;
      lap(b, a) -= 1.0;
    }
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(index[m.root()]) = 1.0;
  return lap.ldlt().solve(rhs)(index[m.root()]);
}

// Criterion 5
Verdict resistance_oracle() {
  Rng rng = seed_stream(105, 0);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int h = 3 + static_cast<int>(rng.below(20));
    std::optional<PlaneTree> t;
    while (!t) {
      try {
        t = sample_kesten(OffspringLaw::geometric(), h, 500, rng);
      } catch (const SizeCapExceeded&) {
      }
    }
    const auto m = build_map(*t, static_cast<MapVariant>(i % 3));
    const int r = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(h)));
    worst = std::max(worst, std::abs(effective_resistance(m, r).exact - dense_resistance(m, r)));
  }
  return {worst <= 1e-8, "max |cg - dense| = " + fmt(worst) + " over 50 maps"};
}

// Criterion 6
Verdict volume_growth() {
  const auto law = OffspringLaw::geometric();
  const auto bar = size_biased(law);
  const std::vector<double> radii{64, 128, 256, 512, 1024};
  const auto table = parallel_map(200, [&](int i) {
    Rng rng = seed_stream(106, static_cast<std::uint64_t>(i));
    const auto m = build_causal(sample_kesten(law, bar, 1024, 1 << 26, rng));
    const auto vols = ball_volumes(m, 1024);
    std::vector<double> row;
    for (double r : radii) row.push_back(static_cast<double>(vols[static_cast<std::size_t>(r)]));
    return row;
  });
  Rng boot = seed_stream(106, 0xb007);
  const auto fit = stats::fit_loglog_replicated(radii, table, boot);
  return {fit.slope >= 1.8 && fit.slope <= 2.2,
          "g = " + fmt(fit.slope) + ", 95% CI [" + fmt(fit.slope_ci.lo) + ", " + fmt(fit.slope_ci.hi) + "]"};
}

ExperimentConfig make(const json& j) {
  auto c = parse_config(j);
  validate(c);
  return c;
}

// Criterion 7
Verdict girth_trends() {
  const auto rec = run(make({{"experiment", "girth"}, {"radii", {64, 512}}, {"replications", 200}, {"master_seed", 107}}));
  const auto& lo = rec.summary["radii"][0];
  const auto& hi = rec.summary["radii"][1];
  const double ratio64 = lo["median_girth_over_r"], ratio512 = hi["median_girth_over_r"];
  const double log512 = hi["median_log_girth_over_log_r"];
  const bool exact = lo["lower_bounds"] == 0 && hi["lower_bounds"] == 0;
  return {exact && rec.failed == 0 && ratio512 < ratio64 && log512 >= 0.8,
          "median girth/r: " + fmt(ratio64) + " (r=64), " + fmt(ratio512) + " (r=512); median log girth/log r at 512: " +
              fmt(log512) + "; censored " + std::to_string(rec.censored)};
}

// Criterion 8
Verdict stable_girth() {
  const auto rec = run(make({{"experiment", "girth"},
                             {"law", "stable(1.3,0.2)"},
                             {"radii", {64, 256}},
                             {"replications", 200},
                             {"master_seed", 108},
                             {"size_cap", 1 << 24},
                             {"stop_fraction", 0.05},
                             {"threshold_fraction", 0.05},
                             {"max_searches", 100}}));
  bool pass = rec.failed == 0;
  std::string detail;
  for (const auto& e : rec.summary["radii"]) {
    const int valid = e["valid"];
    const double p = valid > 0 ? e["p_girth_at_least_threshold"].get<double>() : 0.0;
    pass = pass && valid > 0 && p >= 0.9;
    detail += "r=" + std::to_string(e["r"].get<int>()) + ": P = " + fmt(p) + " over " + std::to_string(valid) +
              " (censored " + std::to_string(e["censored"].get<int>()) + "); ";
  }
  return {pass, detail + "law stable(1.3, gamma 0.2)"};
}

// Criterion 9
Verdict resistance_growth_trend() {
  const json radii = {64, 128, 256, 512, 1024};
  const auto geo = run(make({{"experiment", "resistance"}, {"radii", radii}, {"replications", 4}, {"master_seed", 109},
                             {"size_cap", 1 << 26}}));
  const auto stab = run(make({{"experiment", "resistance"}, {"law", "stable(1.7,0.5)"}, {"radii", radii},
                              {"replications", 4}, {"master_seed", 109}, {"size_cap", 1 << 22}}));
  auto slope = [](const ResultRecord& r) {
    return r.summary.contains("resistance_exponent") ? r.summary["resistance_exponent"]["slope"].get<double>()
                                                     : std::nan("");
  };
  const double a = slope(geo), b = slope(stab);
  return {a < 0.3 && b <= 0.58 && geo.failed == 0 && stab.failed == 0,
          "geometric r = " + fmt(a) + " (" + std::to_string(geo.summary["valid"].get<int>()) + " maps); stable(1.7) r = " +
              fmt(b) + " (" + std::to_string(stab.summary["valid"].get<int>()) + " maps, censored " +
              std::to_string(stab.censored) + ")"};
}

// Criterion 10
Verdict spectral_dimension() {
  const json base = {{"experiment", "walk"}, {"height_cap", 768}, {"n_max", 1 << 15}, {"fit_window", {256, 16384}},
                     {"replications", 50}, {"walkers", 200}, {"band_mass", 1e-11}, {"master_seed", 110}};
  json tree = base;
  tree["tree_only"] = true;
  const auto m = run(make(base));
  const auto t = run(make(tree));
  auto get = [](const ResultRecord& r, const char* k) {
    return r.summary.contains(k) ? r.summary[k].get<double>() : std::nan("");
  };
  const double ds = get(m, "quenched_ds"), nu = get(m, "quenched_nu");
  const double tds = get(t, "quenched_ds"), tnu = get(t, "quenched_nu");
  const bool pass = m.failed == 0 && t.failed == 0 && ds >= 1.8 && ds <= 2.2 && nu >= 0.42 && nu <= 0.55 &&
                    tds >= 1.23 && tds <= 1.43 && tnu >= 0.27 && tnu <= 0.40;
  return {pass, "map ds = " + fmt(ds) + ", nu = " + fmt(nu) + "; tree ds = " + fmt(tds) + ", nu = " + fmt(tnu) +
                    "; failed " + std::to_string(m.failed + t.failed)};
}

// Criterion 11
Verdict varopoulos_carne() {
  int violations = 0;
  long long checks = 0;
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    Rng rng = seed_stream(111, i);
    const auto m = build_causal(sample_kesten(OffspringLaw::geometric(), 80, 1 << 22, rng));
    try {
      const auto rep = vc_check(layered(m), 64);
      checks += rep.checks;
      worst = std::max(worst, rep.worst_ratio);
    } catch (const InequalityViolated&) {
      ++violations;
    }
  }
  return {violations == 0 && worst <= 1.0, std::to_string(violations) + " violations, " + std::to_string(checks) +
                                               " checks, worst ratio " + fmt(worst)};
}

// Criterion 12
Verdict subadditivity() {
  const auto rec = run(make({{"experiment", "subadditive"}, {"ns", {100, 10000}}, {"replications", 1000},
                             {"master_seed", 112}, {"shortcut_radii", {10, 100}},
                             {"size_cap", 1 << 26}}));
  const auto& ns = rec.summary["ns"];
  const double small = ns[0].value("mean_L_over_n", std::nan("")), large = ns[1].value("mean_L_over_n", std::nan(""));
  const int violations = rec.summary["shortcut_violations"];
  return {rec.failed == 0 && large < small && violations == 0,
          "mean L/n: " + fmt(small) + " (n=100), " + fmt(large) + " (n=10^4); shortcut violations " +
              std::to_string(violations) + " of " + std::to_string(rec.summary["shortcut_checks"].get<int>()) +
              "; censored " + std::to_string(rec.censored) + ", failed " + std::to_string(rec.failed)};
}

// Criterion 13
Verdict determinism() {
  const std::vector<json> configs{
      {{"experiment", "girth"}, {"radii", {8, 32}}, {"replications", 20}},
      {{"experiment", "width"}, {"radii", {4, 16}}, {"replications", 20}},
      {{"experiment", "subadditive"}, {"ns", {4, 64}}, {"replications", 20}, {"shortcut_radii", {4}}},
      {{"experiment", "resistance"}, {"radii", {4, 8, 16}}, {"replications", 6}, {"variant", "cautrig"}},
      {{"experiment", "walk"}, {"height_cap", 200}, {"n_max", 256}, {"fit_window", {8, 64}}, {"replications", 4},
       {"walkers", 50}},
      {{"experiment", "renorm-check"}, {"radii", {8, 16}}, {"replications", 10}},
      {{"experiment", "sample-tree"}, {"height_cap", 20}, {"replications", 20}, {"kesten", true}}};
  int differing = 0;
  for (const auto& j : configs) {
    const auto c = make(j);
    const auto a = run(c).csv();
    setenv("CLAB_THREADS", "1", 1);
    const auto b = run(c).csv();
    unsetenv("CLAB_THREADS");
    differing += a != b;
  }
  return {differing == 0, std::to_string(differing) + " of " + std::to_string(configs.size()) +
                              " experiments differ between reruns"};
}

const std::vector<std::pair<std::string, std::function<Verdict()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Verdict()>>> list{
      {"height tail", kolmogorov_tail},
      {"size-bias identity", size_bias_identity},
      {"menger equality", menger_equality},
      {"resistance sandwich", resistance_sandwich},
      {"resistance dense oracle", resistance_oracle},
      {"volume growth", volume_growth},
      {"girth trends", girth_trends},
      {"stable girth", stable_girth},
      {"resistance growth", resistance_growth_trend},
      {"spectral dimension and diffusivity", spectral_dimension},
      {"varopoulos-carne sweep", varopoulos_carne},
      {"subadditivity", subadditivity},
      {"determinism", determinism}};
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> selected;
  app.add_option("criteria", selected, "criterion numbers (default: all)")
      ->check(CLI::Range(1, static_cast<int>(criteria().size())));
  CLI11_PARSE(app, argc, argv);
  if (selected.empty())
    for (int i = 1; i <= static_cast<int>(criteria().size()); ++i) selected.push_back(i);
  int failures = 0;
  for (int k : selected) {
    const auto& [name, check] = criteria()[static_cast<std::size_t>(k - 1)];
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !v.pass;
    std::ostringstream line;
    line << (v.pass ? "PASS" : "FAIL") << "  criterion " << k << " (" << name << "): " << v.detail << " ["
         << std::fixed;
    line.precision(1);
    line << secs << " s]";
    std::cout << line.str() << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
