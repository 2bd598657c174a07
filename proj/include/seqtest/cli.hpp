#pragma once

// Config-driven workflows behind the `seqtest` command line tool.
//
// Needs yaml-cpp (config files) and OpenSSL libcrypto (manifest checksums).

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "seqtest/error_lab.hpp"
#include "seqtest/io.hpp"
#include "seqtest/measures.hpp"
#include "seqtest/redundancy.hpp"
#include "seqtest/sim_continuous.hpp"
#include "seqtest/sim_discrete.hpp"

namespace seqtest::cli {

namespace fs = std::filesystem;

enum class Analysis { Simulate, Redundancy, Errors, Scenario };

inline constexpr const char* to_string(Analysis a) noexcept {
  switch (a) {
    case Analysis::Simulate: return "simulate";
    case Analysis::Redundancy: return "redundancy";
    case Analysis::Errors: return "errors";
    default: return "scenario";
  }
}

enum ExitCode : int { kOk = 0, kParseError = 2, kValidationError = 3, kRuntimeError = 4 };

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FilterScenario {
  FilterSpec filter;
  TimeGrid grid;
  Outcome outcome;
  Belief true_prior;
  Belief agent_prior;
  std::size_t paths;
};

struct SdeScenario {
  SdeSpec sde;
  Belief true_prior;
  Belief agent_prior;
  std::size_t paths;
};

using Scenario = std::variant<ScenarioSpec, FilterScenario, SdeScenario>;

struct Reevaluated {
  MeasurePair pair;
  Belief prior;
};

enum class Candidate { Truth, WouldBe };

struct RedundancyOptions {
  std::variant<Candidate, Reevaluated> candidate = Candidate::Truth;
  RedundancyTolerances tolerances{};
  std::optional<std::pair<double, double>> witness;  // (epsilon, delta)
};

struct AssetOptions {
  double payoff_b = 1.0;
  double payoff_bbar = 0.0;
  double discount = 1.0;
};

struct RunConfig {
  Analysis analysis = Analysis::Simulate;
  Scenario scenario;
  fs::path output_dir;
  std::set<std::string> formats;
  RedundancyOptions redundancy;
  std::vector<std::size_t> report_steps;
  std::optional<AssetOptions> asset;
  std::optional<double> decision_log_threshold;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string source_text;  // raw config, hashed into the manifest
};

/// Command line values that take precedence over the config file.
struct Overrides {
  std::optional<Analysis> analysis;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<fs::path> output_dir;
  std::optional<std::set<std::string>> formats;
  std::optional<unsigned> threads;
};

// ---- parsing ------------------------------------------------------------------

namespace detail {

inline YAML::Node require(const YAML::Node& node, const std::string& key, const std::string& where) {
  const auto child = node[key];
  if (!child) throw ValidationError("missing required key '" + key + "' in " + where);
  return child;
}

template <class T>
T as(const YAML::Node& node, const std::string& what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ParseError("cannot read '" + what + "' as the expected type");
  }
}

inline std::vector<double> as_vector(const YAML::Node& node, const std::string& what) {
  if (node.IsScalar()) return {as<double>(node, what)};
  return as<std::vector<double>>(node, what);
}

inline Belief as_belief(const YAML::Node& node, const std::string& what) {
  const double v = as<double>(node, what);
  if (!(v > 0.0 && v < 1.0)) throw ValidationError("'" + what + "' must lie in (0,1)");
  return Belief(v);
}

inline Outcome as_outcome(const YAML::Node& node, const std::string& what) {
  const auto s = as<std::string>(node, what);
  if (s == "b") return Outcome::b;
  if (s == "bbar") return Outcome::bbar;
  throw ValidationError("'" + what + "' must be b or bbar, got '" + s + "'");
}

inline MeasurePair parse_pair(const YAML::Node& node, const std::string& where) {
  if (!node.IsMap()) throw ParseError(where + " must be a mapping");
  const auto family = as<std::string>(require(node, "family", where), where + ".family");
  MeasurePair pair;
  if (family == "gaussian_iid") {
    pair = GaussianIID{as<double>(require(node, "mean_b", where), "mean_b"),
                       as<double>(require(node, "mean_bbar", where), "mean_bbar"),
                       as<double>(require(node, "stdev", where), "stdev")};
  } else if (family == "bernoulli_iid") {
    pair = BernoulliIID{as<double>(require(node, "prob_b", where), "prob_b"),
                        as<double>(require(node, "prob_bbar", where), "prob_bbar")};
  } else if (family == "gaussian_schedule") {
    pair = GaussianSchedule{as_vector(require(node, "mean_b", where), "mean_b"),
                            as_vector(require(node, "mean_bbar", where), "mean_bbar"),
                            as_vector(require(node, "stdev", where), "stdev")};
  } else {
    throw ValidationError("unknown measure family '" + family + "' in " + where);
  }
  try {
    validate(pair);
  } catch (const MeasureError& e) {
    throw ValidationError(where + ": " + e.what());
  }
  return pair;
}

inline std::size_t positive_count(const YAML::Node& node, const std::string& what) {
  const auto v = as<long long>(node, what);
  if (v < 1) throw ValidationError("'" + what + "' must be at least 1");
  return static_cast<std::size_t>(v);
}

inline Scenario parse_scenario(const YAML::Node& s, std::uint64_t seed) {
  const std::string where = "scenario";
  const auto kind = as<std::string>(require(s, "kind", where), "scenario.kind");
  const Belief true_prior = as_belief(require(s, "true_prior", where), "true_prior");
  const Belief agent_prior = as_belief(require(s, "agent_prior", where), "agent_prior");
  const std::size_t paths = positive_count(require(s, "paths", where), "paths");
  const std::size_t steps = positive_count(require(s, "horizon_steps", where), "horizon_steps");

  if (kind == "discrete") {
    const auto outcome = as<std::string>(require(s, "outcome", where), "outcome");
    OutcomeMode mode = DrawnFromPrior{};
    if (outcome != "drawn") mode = FixedOutcome{as_outcome(s["outcome"], "outcome")};
    ScenarioSpec spec{parse_pair(require(s, "truth_pair", where), "truth_pair"),
                      parse_pair(require(s, "test_pair", where), "test_pair"),
                      true_prior, agent_prior, mode, steps, paths, seed};
    return spec;
  }
  const double dt = as<double>(require(s, "time_step", where), "time_step");
  const Outcome outcome = as_outcome(require(s, "outcome", where), "outcome");
  if (kind == "filter") {
    FilterScenario f{{as<double>(require(s, "true_drift", where), "true_drift"),
                      as<double>(require(s, "agent_drift", where), "agent_drift"),
                      as<double>(require(s, "obs_noise", where), "obs_noise"),
                      as<double>(require(s, "agent_obs_noise", where), "agent_obs_noise")},
                     {dt, steps}, outcome, true_prior, agent_prior, paths};
    return f;
  }
  if (kind == "sde") {
    Clock clock = IdentityClock{};
    if (const auto c = s["clock"]) {
      if (c.IsScalar()) {
        if (as<std::string>(c, "clock") != "identity") throw ValidationError("clock must be identity or {compactify: T}");
      } else {
        clock = CompactifyClock{as<double>(require(c, "compactify", "scenario.clock"), "clock.compactify")};
      }
    }
    SdeScenario sc{{as_vector(require(s, "signal_to_noise", where), "signal_to_noise"), clock, {dt, steps}, outcome, seed},
                   true_prior, agent_prior, paths};
    return sc;
  }
  throw ValidationError("unknown scenario kind '" + kind + "' (discrete, filter, sde)");
}

inline std::optional<Analysis> analysis_from(const std::string& s) {
  if (s == "simulate") return Analysis::Simulate;
  if (s == "redundancy") return Analysis::Redundancy;
  if (s == "errors") return Analysis::Errors;
  if (s == "scenario") return Analysis::Scenario;
  return std::nullopt;
}

inline void set_paths(Scenario& sc, std::size_t paths) {
  std::visit(
      [&](auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, ScenarioSpec>) {
          s.ensemble_size = paths;
        } else {
          s.paths = paths;
        }
      },
      sc);
}

}  // namespace detail

/// Parses and validates a YAML config. Throws ParseError for malformed input
/// and ValidationError for well-formed input that breaks a contract.
inline RunConfig parse_config(const std::string& text, const Overrides& ov = {}) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ParseError(std::string("YAML syntax error: ") + e.what());
  }
  if (!root.IsMap()) throw ParseError("config must be a mapping at top level");

  std::optional<Analysis> from_file;
  if (const auto a = root["analysis"]) {
    from_file = detail::analysis_from(detail::as<std::string>(a, "analysis"));
    if (!from_file) throw ValidationError("unknown analysis '" + a.as<std::string>() + "'");
  }
  if (ov.analysis && from_file && *ov.analysis != *from_file) {
    throw ValidationError(std::string("config selects analysis '") + to_string(*from_file) + "' but the command is '" +
                          to_string(*ov.analysis) + "'");
  }
  if (!ov.analysis && !from_file) throw ValidationError("no analysis selected");

  std::uint64_t seed = 0;
  if (ov.seed) {
    seed = *ov.seed;
  } else if (const auto s = root["seed"]) {
    seed = detail::as<std::uint64_t>(s, "seed");
  } else {
    throw ValidationError("a seed is required (config key 'seed' or --seed)");
  }

  RunConfig cfg{.analysis = ov.analysis ? *ov.analysis : *from_file,
                .scenario = detail::parse_scenario(detail::require(root, "scenario", "config"), seed)};
  cfg.seed = seed;
  cfg.source_text = text;
  if (ov.threads) {
    cfg.threads = *ov.threads;
  } else if (const auto t = root["threads"]) {
    cfg.threads = detail::as<unsigned>(t, "threads");
  }
  if (ov.paths) {
    if (*ov.paths < 1) throw ValidationError("--paths must be at least 1");
    detail::set_paths(cfg.scenario, *ov.paths);
  }

  const auto out = root["output"];
  if (ov.output_dir) {
    cfg.output_dir = *ov.output_dir;
  } else if (out && out["dir"]) {
    cfg.output_dir = detail::as<std::string>(out["dir"], "output.dir");
  } else {
    throw ValidationError("an output directory is required (output.dir or --out)");
  }
  if (ov.formats) {
    cfg.formats = *ov.formats;
  } else if (out && out["formats"]) {
    for (auto& f : detail::as<std::vector<std::string>>(out["formats"], "output.formats")) cfg.formats.insert(f);
  } else {
    cfg.formats = {"csv", "jsonl", "json"};
  }
  if (cfg.formats.empty()) throw ValidationError("no output format selected");
  for (const auto& f : cfg.formats) {
    if (f != "csv" && f != "jsonl" && f != "json") throw ValidationError("unknown output format '" + f + "'");
  }

  if (const auto r = root["redundancy"]) {
    if (const auto c = r["candidate"]) {
      if (c.IsScalar()) {
        const auto name = detail::as<std::string>(c, "redundancy.candidate");
        if (name == "truth") {
          cfg.redundancy.candidate = Candidate::Truth;
        } else if (name == "would_be") {
          cfg.redundancy.candidate = Candidate::WouldBe;
        } else {
          throw ValidationError("redundancy.candidate must be truth, would_be or {pair, prior}");
        }
      } else {
        cfg.redundancy.candidate =
            Reevaluated{detail::parse_pair(detail::require(c, "pair", "redundancy.candidate"), "redundancy.candidate.pair"),
                        detail::as_belief(detail::require(c, "prior", "redundancy.candidate"), "redundancy.candidate.prior")};
      }
    }
    if (const auto t = r["tolerances"]) {
      auto& tol = cfg.redundancy.tolerances;
      if (t["gamma"]) tol.gamma = detail::as<double>(t["gamma"], "tolerances.gamma");
      if (t["homogeneity"]) tol.homogeneity = detail::as<double>(t["homogeneity"], "tolerances.homogeneity");
      if (t["trend_ratio"]) tol.trend_ratio = detail::as<double>(t["trend_ratio"], "tolerances.trend_ratio");
      if (!(tol.gamma > 0.0) || !(tol.homogeneity > 0.0) || !(tol.trend_ratio > 1.0)) {
        throw ValidationError("tolerances must be positive and trend_ratio above 1");
      }
    }
    if (const auto w = r["witness"]) {
      const double eps = detail::as<double>(detail::require(w, "epsilon", "redundancy.witness"), "epsilon");
      const double delta = detail::as<double>(detail::require(w, "delta", "redundancy.witness"), "delta");
      if (!(eps > 0.0) || !(delta > eps)) throw ValidationError("witness needs 0 < epsilon < delta");
      cfg.redundancy.witness = {eps, delta};
    }
  }
  if (const auto e = root["errors"]) {
    if (e["report_steps"]) cfg.report_steps = detail::as<std::vector<std::size_t>>(e["report_steps"], "errors.report_steps");
  }
  if (const auto a = root["asset"]) {
    cfg.asset = AssetOptions{detail::as<double>(detail::require(a, "payoff_b", "asset"), "payoff_b"),
                             detail::as<double>(detail::require(a, "payoff_bbar", "asset"), "payoff_bbar"),
                             detail::as<double>(detail::require(a, "discount", "asset"), "discount")};
    if (!(cfg.asset->discount > 0.0) || cfg.asset->discount > 1.0) throw ValidationError("asset.discount must lie in (0,1]");
  }
  if (const auto d = root["decision"]) {
    cfg.decision_log_threshold = detail::as<double>(detail::require(d, "log_threshold", "decision"), "log_threshold");
    if (!(*cfg.decision_log_threshold > 0.0)) throw ValidationError("decision.log_threshold must be positive");
  }

  // scenario-level contracts
  try {
    std::visit(
        [](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, ScenarioSpec>) {
            validate(s);
          } else if constexpr (std::is_same_v<T, FilterScenario>) {
            validate(s.filter);
            if (!(s.grid.dt > 0.0)) throw GridError("time_step must be positive");
          } else {
            validate(s.sde);
          }
        },
        cfg.scenario);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  if (cfg.analysis == Analysis::Scenario && !cfg.asset) throw ValidationError("scenario analysis needs an 'asset' block");
  if (std::holds_alternative<Reevaluated>(cfg.redundancy.candidate) && !std::holds_alternative<ScenarioSpec>(cfg.scenario)) {
    throw ValidationError("a re-evaluated candidate pair needs a discrete scenario");
  }
  const std::size_t horizon = std::visit(
      [](const auto& s) -> std::size_t {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ScenarioSpec>) return s.horizon;
        else if constexpr (std::is_same_v<T, FilterScenario>) return s.grid.steps;
        else return s.sde.grid.steps;
      },
      cfg.scenario);
  for (auto k : cfg.report_steps) {
    if (k > horizon) throw ValidationError("report step " + std::to_string(k) + " beyond horizon");
  }
  return cfg;
}

inline RunConfig load_config(const fs::path& path, const Overrides& ov = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), ov);
}

// ---- execution ----------------------------------------------------------------

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return os.str();
}

/// Generates the scenario's path records.
inline std::vector<PathRecord> simulate(const RunConfig& cfg) {
  return std::visit(
      [&](const auto& s) -> std::vector<PathRecord> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ScenarioSpec>) {
          return simulate_paths(s, cfg.threads);
        } else if constexpr (std::is_same_v<T, FilterScenario>) {
          std::vector<PathRecord> out(s.paths);
          parallel_for(s.paths, cfg.threads, [&](std::size_t i) {
            out[i] = filter_path_record(s.filter, s.grid, s.outcome, s.true_prior, s.agent_prior, cfg.seed, i);
          });
          return out;
        } else {
          std::vector<PathRecord> out(s.paths);
          parallel_for(s.paths, cfg.threads,
                       [&](std::size_t i) { out[i] = sde_path_record(s.sde, s.true_prior, s.agent_prior, i); });
          return out;
        }
      },
      cfg.scenario);
}

namespace detail {

class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path root) : root_(std::move(root)) {}

  void write(const fs::path& relative, const std::string& bytes) {
    const fs::path full = root_ / relative;
    fs::create_directories(full.parent_path());
    std::ofstream out(full, std::ios::binary);
    out << bytes;
    if (!out) throw std::runtime_error("failed to write " + full.string());
    artifacts_.push_back({{"file", relative.generic_string()}, {"sha256", sha256_hex(bytes)}});
  }

  const io::json& artifacts() const { return artifacts_; }

 private:
  fs::path root_;
  io::json artifacts_ = io::json::array();
};

inline std::string path_file(const std::string& dir, std::size_t index) {
  std::ostringstream os;
  os << dir << "/path_" << std::setw(5) << std::setfill('0') << index << ".csv";
  return os.str();
}

inline double time_step_of(const Scenario& sc) {
  if (const auto* f = std::get_if<FilterScenario>(&sc)) return f->grid.dt;
  if (const auto* s = std::get_if<SdeScenario>(&sc)) return s->sde.grid.dt;
  return 0.0;
}

inline io::json scenario_summary(const RunConfig& cfg) {
  io::json j;
  if (const auto* d = std::get_if<ScenarioSpec>(&cfg.scenario)) {
    j["kind"] = "discrete";
    j["truth_pair"] = io::to_json(classify_pair(d->truth_pair));
    j["test_pair"] = io::to_json(classify_pair(d->test_pair));
  } else if (const auto* f = std::get_if<FilterScenario>(&cfg.scenario)) {
    j["kind"] = "filter";
    j["true_signal_to_noise"] = f->filter.true_signal_to_noise();
    j["agent_signal_to_noise"] = f->filter.agent_signal_to_noise();
    j["expected_loglr_gap_at_horizon"] = expected_filter_gap(f->filter, f->grid.horizon(), f->outcome);
  } else {
    j["kind"] = "sde";
  }
  return j;
}

inline void run_simulate(const RunConfig& cfg, const std::vector<PathRecord>& records, ArtifactWriter& w) {
  if (cfg.formats.count("csv")) {
    for (const auto& r : records) {
      std::ostringstream os;
      io::write_trajectory_csv(os, r);
      w.write(path_file("trajectories", r.path_index), os.str());
    }
  }
  if (cfg.formats.count("jsonl")) {
    std::ostringstream os;
    io::write_jsonl(os, records);
    w.write("paths.jsonl", os.str());
  }
  if (cfg.formats.count("json")) {
    io::json summary = {{"analysis", "simulate"}, {"paths", records.size()}, {"scenario", scenario_summary(cfg)}};
    if (cfg.decision_log_threshold) {
      std::size_t counts[3] = {0, 0, 0};
      for (const auto& r : records) ++counts[static_cast<int>(classify_outcome(r, *cfg.decision_log_threshold))];
      summary["decisions"] = {{"log_threshold", *cfg.decision_log_threshold},
                              {"Decided_b", counts[0]}, {"Decided_bbar", counts[1]}, {"Undecided", counts[2]}};
    }
    w.write("summary.json", summary.dump(2) + "\n");
  }
}

inline void run_redundancy(const RunConfig& cfg, const std::vector<PathRecord>& records, ArtifactWriter& w) {
  const auto base = agent_ensemble(records);
  BeliefEnsemble hat = std::visit(
      [&](const auto& c) -> BeliefEnsemble {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, Reevaluated>) {
          return reevaluated_ensemble(records, c.pair, c.prior);
        } else {
          return c == Candidate::Truth ? truth_ensemble(records) : would_be_ensemble(records);
        }
      },
      cfg.redundancy.candidate);
  const auto report = redundancy_verdict(base, hat, cfg.redundancy.tolerances);
  if (cfg.formats.count("json")) w.write("redundancy_report.json", io::to_json(report).dump(2) + "\n");
  if (cfg.formats.count("csv")) {
    std::ostringstream os;
    io::write_power_law_series_csv(os, report);
    w.write("power_law_series.csv", os.str());
  }
  if (cfg.redundancy.witness) {
    const auto [eps, delta] = *cfg.redundancy.witness;
    const auto ws = path_dependency_witness(records, eps, delta);
    if (cfg.formats.count("json")) w.write("witnesses.json", io::to_json(ws).dump(2) + "\n");
  }
}

inline void run_errors(const RunConfig& cfg, const std::vector<PathRecord>& records, ArtifactWriter& w) {
  const double dt = time_step_of(cfg.scenario);
  std::vector<ErrorDecomposition> decs;
  decs.reserve(records.size());
  for (const auto& r : records) decs.push_back(decompose(r));
  if (cfg.formats.count("csv")) {
    for (const auto& d : decs) {
      std::ostringstream os;
      io::write_decomposition_csv(os, d, dt);
      w.write(path_file("decomposition", d.path_index), os.str());
    }
  }
  if (cfg.formats.count("jsonl")) {
    std::ostringstream os;
    for (const auto& d : decs) os << io::to_json(d).dump() << '\n';
    w.write("decomposition.jsonl", os.str());
  }
  if (cfg.formats.count("json")) {
    std::vector<std::size_t> steps = cfg.report_steps;
    if (steps.empty()) steps.push_back(records.front().size() - 1);
    std::optional<DriftReference> drift;
    std::vector<double> true_sigma;
    std::vector<double> agent_sigma;
    if (const auto* f = std::get_if<FilterScenario>(&cfg.scenario)) {
      true_sigma.assign(f->grid.steps + 1, f->filter.true_signal_to_noise());
      agent_sigma.assign(f->grid.steps + 1, f->filter.agent_signal_to_noise());
      drift = DriftReference{true_sigma, agent_sigma, f->grid.dt};
    }
    io::json stats = io::json::array();
    for (const auto& s : sign_statistics(decs, steps, dt, drift)) stats.push_back(io::to_json(s));
    double worst = 0.0;
    for (const auto& d : decs) worst = std::max(worst, d.closed_form_residual);
    io::json summary = {{"analysis", "errors"},
                        {"paths", decs.size()},
                        {"rho", decs.front().rho},
                        {"bias_sign", decs.front().bias_sign},
                        {"max_closed_form_residual", worst},
                        {"sign_statistics", stats},
                        {"scenario", scenario_summary(cfg)}};
    w.write("error_summary.json", summary.dump(2) + "\n");
  }
}

inline void run_scenario(const RunConfig& cfg, const std::vector<PathRecord>& records, ArtifactWriter& w) {
  const auto& a = *cfg.asset;
  const double dt = time_step_of(cfg.scenario);
  double mean_final_z = 0.0;
  for (const auto& r : records) {
    const auto s = asset_scenario(r, a.payoff_b, a.payoff_bbar, a.discount);
    mean_final_z += s.z.back();
    if (cfg.formats.count("csv")) {
      std::ostringstream os;
      io::write_asset_csv(os, s, dt);
      w.write(path_file("asset", r.path_index), os.str());
    }
  }
  if (cfg.formats.count("json")) {
    io::json summary = {{"analysis", "scenario"},
                        {"payoff_b", a.payoff_b},
                        {"payoff_bbar", a.payoff_bbar},
                        {"discount", a.discount},
                        {"paths", records.size()},
                        {"mean_final_premium", mean_final_z / static_cast<double>(records.size())}};
    w.write("asset_summary.json", summary.dump(2) + "\n");
  }
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace detail

/// Runs the selected workflow and writes its artifacts plus manifest.json.
/// Throws ValidationError when the output directory is unusable; any other
/// exception is a runtime failure.
inline void execute(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec || !fs::is_directory(cfg.output_dir)) {
    throw ValidationError("output directory " + cfg.output_dir.string() + " is not writable");
  }
  const auto records = simulate(cfg);
  detail::ArtifactWriter w(cfg.output_dir);
  switch (cfg.analysis) {
    case Analysis::Simulate: detail::run_simulate(cfg, records, w); break;
    case Analysis::Redundancy: detail::run_redundancy(cfg, records, w); break;
    case Analysis::Errors: detail::run_errors(cfg, records, w); break;
    case Analysis::Scenario: detail::run_scenario(cfg, records, w); break;
  }
  const io::json manifest = {{"analysis", to_string(cfg.analysis)},
                             {"config_sha256", sha256_hex(cfg.source_text)},
                             {"seed", cfg.seed},
                             {"artifacts", w.artifacts()},
                             {"created_at", detail::utc_timestamp()}};
  std::ofstream(cfg.output_dir / "manifest.json") << manifest.dump(2) << '\n';
}

/// Machine-readable error report.
inline io::json error_report(int code, const std::string& kind, const std::string& message) {
  return {{"status", "error"}, {"exit_code", code}, {"kind", kind}, {"message", message}};
}

/// Parses, validates and executes; maps failures to exit codes and writes the
/// error report to `err` (and to error.json in the output directory when known).
inline int run(const fs::path& config_path, const Overrides& ov, std::ostream& err = std::cerr) {
  std::optional<fs::path> out_dir = ov.output_dir;
  auto fail = [&](int code, const std::string& kind, const std::string& message) {
    const auto report = error_report(code, kind, message);
    err << report.dump() << '\n';
    if (out_dir) {
      std::error_code ec;
      fs::create_directories(*out_dir, ec);
      if (!ec) std::ofstream(*out_dir / "error.json") << report.dump(2) << '\n';
    }
    return code;
  };
  std::optional<RunConfig> cfg;
  try {
    cfg = load_config(config_path, ov);
    out_dir = cfg->output_dir;
  } catch (const ParseError& e) {
    return fail(kParseError, "parse", e.what());
  } catch (const ValidationError& e) {
    return fail(kValidationError, "validation", e.what());
  } catch (const std::exception& e) {
    return fail(kValidationError, "validation", e.what());
  }
  try {
    execute(*cfg);
  } catch (const ValidationError& e) {
    return fail(kValidationError, "validation", e.what());
  } catch (const std::exception& e) {
    return fail(kRuntimeError, "runtime", e.what());
  }
  return kOk;
}

}  // namespace seqtest::cli
