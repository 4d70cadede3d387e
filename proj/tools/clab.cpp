#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "clab/experiments.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kTooManyFailures = 3;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> replications;
  std::optional<std::string> out;
};

clab::ExperimentConfig load(const std::string& kind, const Overrides& o) {
  clab::json j = clab::json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw clab::ConfigError("cannot open " + o.config);
    try {
      j = clab::json::parse(in);
    } catch (const clab::json::exception& e) {
      throw clab::ConfigError(o.config + ": " + e.what());
    }
  }
  if (!j.is_object()) throw clab::ConfigError("config must be a JSON object");
  if (j.contains("experiment") && j["experiment"] != kind)
    throw clab::ConfigError("config is for '" + j["experiment"].dump() + "', not '" + kind + "'");
  j["experiment"] = kind;
  if (o.seed) j["master_seed"] = *o.seed;
  if (o.replications) j["replications"] = *o.replications;
  if (o.out) j["out"] = *o.out;
  auto c = clab::parse_config(j);
  clab::validate(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal map experiments"};
  app.require_subcommand(1);
  Overrides o;
  for (const auto& [kind, name] : clab::experiment_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--replications", o.replications, "number of replications");
    sub->add_option("--out", o.out, "output directory");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  const std::string kind = app.get_subcommands().front()->get_name();
  try {
    const auto config = load(kind, o);
    const auto rec = clab::run(config);
    clab::write_outputs(rec, config.out);
    std::cout << rec.summary.dump(2) << '\n';
    if (rec.too_many_failures()) {
      std::cerr << "clab: " << rec.failed << " of " << rec.replications << " replications failed\n";
      for (const auto& e : rec.errors) std::cerr << "  " << e << '\n';
      return kTooManyFailures;
    }
  } catch (const clab::ConfigError& e) {
    std::cerr << "clab: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "clab: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
