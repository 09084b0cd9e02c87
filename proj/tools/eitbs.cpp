// eitbs - scenario runner: figure data, sweeps, single runs and the acceptance
// suite. Exit status 0 on success, 1 on a failed criterion or run error, 2 on
// a configuration error.

#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "eitbs/eitbs.hpp"

namespace {

const std::map<std::string, std::string>& subcommand_ids() {
  static const std::map<std::string, std::string> ids{{"fig2", "fig2_overlap"},
                                                      {"fig3", "fig3_crossover"},
                                                      {"fig4", "fig4_threephoton"},
                                                      {"sweep", "sweep"},
                                                      {"run", "single_run"}};
  return ids;
}

struct Options {
  std::string config;
  std::string out;
  std::size_t workers = 0;
  std::string seed;
  std::vector<std::string> overrides;
  std::string only;
};

eitbs::RawConfig load(const Options& o, const std::string& command) {
  eitbs::RawConfig raw = o.config.empty() ? eitbs::RawConfig{} : eitbs::RawConfig::from_file(o.config);
  for (const auto& ov : o.overrides) raw.apply_override(ov);
  if (!o.out.empty()) raw.set("output.dir", o.out);
  if (o.workers) raw.set("scenario.workers", std::to_string(o.workers));
  if (!o.seed.empty()) raw.set("scenario.seed", o.seed);

  const auto it = subcommand_ids().find(command);
  if (it != subcommand_ids().end()) {
    if (raw.is_set("scenario.id") && raw.get("scenario.id") != it->second)
      throw eitbs::ConfigError("scenario.id = " + raw.get("scenario.id") + " conflicts with subcommand '" + command +
                               "'");
    raw.set("scenario.id", it->second);
  }
  return raw;
}

int accept(const eitbs::ScenarioConfig& c, const std::string& only) {
  const auto results = eitbs::run_acceptance(c, eitbs::parse_criteria(only), [](const eitbs::CriterionResult& r) {
    std::cout << eitbs::format_line(r) << std::endl;
  });
  std::cout << "wrote " << eitbs::write_table(c.out_dir, eitbs::header_lines(c), eitbs::acceptance_table(results)).string()
            << '\n';
  int failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  std::cout << (failed ? "FAILED: " + std::to_string(failed) + " of " : "all passed: ") << results.size()
            << " criteria\n";
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid magnon-photon beam splitter simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "output directory (must exist)");
  app.add_option("--workers", o.workers, "parallel jobs")->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "random seed (unsigned 64-bit)");
  app.add_option("--override", o.overrides, "section.key=value, repeatable")->take_all();

  for (const auto& [name, id] : subcommand_ids()) app.add_subcommand(name, "scenario " + id);
  auto* acc = app.add_subcommand("accept", "run the acceptance criteria");
  acc->add_option("--only", o.only, "comma-separated criterion numbers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const eitbs::ScenarioConfig c = eitbs::resolve(load(o, command));
    if (command == "accept") return accept(c, o.only);
    for (const auto& p : eitbs::run_and_write(c)) std::cout << "wrote " << p.string() << '\n';
    return 0;
  } catch (const eitbs::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error (" << command << "): " << e.what() << '\n';
    return 1;
  }
}
