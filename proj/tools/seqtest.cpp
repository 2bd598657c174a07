// seqtest: simulate coupled belief processes and run the redundancy, error
// decomposition and asset-scenario analyses from a YAML config.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "seqtest/cli.hpp"

namespace {

std::set<std::string> split_formats(const std::string& list) {
  std::set<std::string> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.insert(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using seqtest::cli::Analysis;

  CLI::App app{"Sequential binary testing: belief simulation, redundancy and error analysis"};
  app.require_subcommand(1);

  std::string config;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  std::string out;
  std::string formats;
  unsigned threads = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "YAML run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Master seed (overrides the config)");
    sub->add_option("--paths", paths, "Number of simulated paths (overrides the config)");
    sub->add_option("--out", out, "Output directory (overrides the config)");
    sub->add_option("--format", formats, "Comma-separated subset of csv,jsonl,json");
    sub->add_option("--threads", threads, "Worker threads for path simulation");
  };
  struct Sub {
    const char* name;
    const char* help;
    Analysis analysis;
  };
  const Sub subs[] = {
      {"simulate", "Write trajectories of the objective, would-be and agent beliefs", Analysis::Simulate},
      {"redundancy", "Test informational redundancy and search path-dependency witnesses", Analysis::Redundancy},
      {"errors", "Decompose inferential errors into bias and diffusive parts", Analysis::Errors},
      {"scenario", "Asset-pricing scenario: prices, realised worth and premia", Analysis::Scenario},
  };
  std::vector<std::pair<CLI::App*, Analysis>> registered;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_common(sub);
    registered.emplace_back(sub, s.analysis);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : seqtest::cli::kParseError;
  }

  seqtest::cli::Overrides ov;
  for (const auto& [sub, analysis] : registered) {
    if (sub->parsed()) {
      ov.analysis = analysis;
      if (sub->count("--seed")) ov.seed = seed;
      if (sub->count("--paths")) ov.paths = paths;
      if (sub->count("--out")) ov.output_dir = out;
      if (sub->count("--format")) ov.formats = split_formats(formats);
      if (sub->count("--threads")) ov.threads = threads;
    }
  }
  return seqtest::cli::run(config, ov);
}
