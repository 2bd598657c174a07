#pragma once

// Discrete-time simulation of the objective, would-be and agent belief
// processes on data drawn from the true measure pair.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <span>
#include <variant>
#include <vector>

#include "seqtest/belief.hpp"
#include "seqtest/measures.hpp"
#include "seqtest/parallel.hpp"
#include "seqtest/path_record.hpp"

namespace seqtest {

struct FixedOutcome {
  Outcome outcome;
};
/// B is drawn once per path with probability p_0 for b.
struct DrawnFromPrior {};

using OutcomeMode = std::variant<FixedOutcome, DrawnFromPrior>;

struct ScenarioSpec {
  MeasurePair truth_pair;  // P_B, generates the data
  MeasurePair test_pair;   // Q_B, used by the agent and the would-be process
  Belief true_prior;
  Belief agent_prior;
  OutcomeMode outcome_mode;
  std::size_t horizon;
  std::size_t ensemble_size;
  std::uint64_t master_seed;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Checks a scenario before any path is generated.
inline void validate(const ScenarioSpec& spec) {
  if (spec.horizon < 1) throw ConfigError("horizon must be at least 1");
  if (spec.ensemble_size < 1) throw ConfigError("ensemble size must be at least 1");
  try {
    validate(spec.truth_pair);
    validate(spec.test_pair);
  } catch (const MeasureError& e) {
    throw ConfigError(e.what());
  }
  for (const auto* pair : {&spec.truth_pair, &spec.test_pair}) {
    if (auto len = schedule_length(*pair); len && *len < spec.horizon) {
      throw ConfigError("schedule length " + std::to_string(*len) + " is shorter than horizon " +
                        std::to_string(spec.horizon));
    }
  }
  if (is_bernoulli(spec.truth_pair) != is_bernoulli(spec.test_pair)) {
    throw ConfigError("truth and test pairs must share support (both Bernoulli or both Gaussian)");
  }
}

/// Generates path `path_index` of the ensemble. Pure function of (spec, index).
inline PathRecord simulate_path(const ScenarioSpec& spec, std::size_t path_index) {
  Engine rng = path_engine(spec.master_seed, path_index);
  PathRecord r;
  r.path_index = path_index;
  r.true_prior = spec.true_prior.value();
  r.agent_prior = spec.agent_prior.value();
  if (const auto* fixed = std::get_if<FixedOutcome>(&spec.outcome_mode)) {
    r.outcome = fixed->outcome;
  } else {
    r.outcome = std::generate_canonical<double, 53>(rng) < spec.true_prior.value() ? Outcome::b : Outcome::bbar;
  }

  const std::size_t n = spec.horizon;
  r.data.resize(n);
  r.true_loglr.assign(n + 1, 0.0);
  r.test_loglr.assign(n + 1, 0.0);
  for (std::size_t step = 1; step <= n; ++step) {
    const double x = sample_datum(spec.truth_pair, step, r.outcome, rng);
    r.data[step - 1] = x;
    r.true_loglr[step] = r.true_loglr[step - 1] + loglr_increment(spec.truth_pair, step, x);
    r.test_loglr[step] = r.test_loglr[step - 1] + loglr_increment(spec.test_pair, step, x);
  }
  fill_beliefs_and_errors(r);
  return r;
}

/// Whole ensemble, ordered by path index. Output is independent of `threads`.
inline std::vector<PathRecord> simulate_paths(const ScenarioSpec& spec, unsigned threads = 1) {
  validate(spec);
  std::vector<PathRecord> out(spec.ensemble_size);
  parallel_for(spec.ensemble_size, threads, [&](std::size_t i) { out[i] = simulate_path(spec, i); });
  return out;
}

// ---- small-increment relation ----------------------------------------------

struct IncrementWindow {
  std::size_t first_step;  // 1-based step of the window's first increment
  double mean_increment;
  double half_second_moment;  // signed by the realized outcome
  double ratio;
};

struct SmallIncrementReport {
  Outcome outcome;
  std::size_t window;
  std::vector<IncrementWindow> windows;
  /// Pooled over all complete windows.
  double mean_increment;
  double half_second_moment;  // (+/-) 0.5 E[dl^2]
  double ratio;               // mean_increment / half_second_moment
  /// Same with the centered second moment, 0.5 Var[dl]. For Gaussian pairs
  /// this ratio is 1 whatever the increment size.
  double half_variance;
  double centered_ratio;
};

class InsufficientData : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Windowed estimates of E[dl] against (+/-) 0.5 E[dl^2] on the agent's log-LR
/// increments, sign taken from the realized outcome. With several records the
/// windows of every path are pooled; all records must share outcome and horizon.
inline SmallIncrementReport small_increment_diagnostic(std::span<const PathRecord> records, std::size_t window) {
  if (records.empty()) throw InsufficientData("no paths");
  const auto& first = records.front();
  const std::size_t horizon = first.test_loglr.empty() ? 0 : first.test_loglr.size() - 1;
  if (window == 0) throw InsufficientData("window must be positive");
  if (window > horizon) {
    throw InsufficientData("window " + std::to_string(window) + " exceeds horizon " + std::to_string(horizon));
  }
  for (const auto& r : records) {
    if (r.outcome != first.outcome || r.test_loglr.size() != first.test_loglr.size()) {
      throw std::invalid_argument("pooled paths must share outcome and horizon");
    }
  }
  const double sign = outcome_sign(first.outcome);
  SmallIncrementReport rep{};
  rep.outcome = first.outcome;
  rep.window = window;
  const std::size_t count = horizon / window;
  const double per_window = static_cast<double>(window * records.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t w = 0; w < count; ++w) {
    double ws = 0.0;
    double wsq = 0.0;
    for (const auto& r : records) {
      for (std::size_t k = w * window; k < (w + 1) * window; ++k) {
        const double dl = r.test_loglr[k + 1] - r.test_loglr[k];
        ws += dl;
        wsq += dl * dl;
      }
    }
    sum += ws;
    sum_sq += wsq;
    const double m = ws / per_window;
    const double h = sign * 0.5 * wsq / per_window;
    rep.windows.push_back({w * window + 1, m, h, m / h});
  }
  const double total = static_cast<double>(count) * per_window;
  rep.mean_increment = sum / total;
  rep.half_second_moment = sign * 0.5 * sum_sq / total;
  rep.ratio = rep.mean_increment / rep.half_second_moment;
  const double variance = sum_sq / total - rep.mean_increment * rep.mean_increment;
  rep.half_variance = sign * 0.5 * variance;
  rep.centered_ratio = rep.mean_increment / rep.half_variance;
  return rep;
}

inline SmallIncrementReport small_increment_diagnostic(const PathRecord& record, std::size_t window) {
  return small_increment_diagnostic(std::span<const PathRecord>(&record, 1), window);
}

// ---- outcome classification -------------------------------------------------

enum class Decision { DecidedB, DecidedBbar, Undecided };

constexpr const char* to_string(Decision d) noexcept {
  switch (d) {
    case Decision::DecidedB: return "Decided_b";
    case Decision::DecidedBbar: return "Decided_bbar";
    default: return "Undecided";
  }
}

/// Threshold rule on the final agent log-LR.
inline Decision classify_outcome(const PathRecord& record, double log_threshold) {
  if (!(log_threshold > 0.0)) throw std::domain_error("log threshold must be positive");
  const double l = record.test_loglr.empty() ? 0.0 : record.test_loglr.back();
  if (l >= log_threshold) return Decision::DecidedB;
  if (l <= -log_threshold) return Decision::DecidedBbar;
  return Decision::Undecided;
}

}  // namespace seqtest
