#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "seqtest/belief.hpp"
#include "seqtest/measures.hpp"

namespace seqtest {

/// One simulated trajectory carrying the three coupled belief processes.
///
/// Index 0 of every per-time series is the initial state (log-LRs 0, beliefs
/// at their priors); `data[k]` is the datum that moves the state from k to
/// k+1. Discrete runs have time_step == 0 and are indexed by step; continuous
/// runs carry the grid spacing and `data` holds observation increments.
struct PathRecord {
  std::size_t path_index = 0;
  Outcome outcome = Outcome::b;
  double time_step = 0.0;
  double true_prior = 0.5;   // p_0
  double agent_prior = 0.5;  // pi_0

  std::vector<double> data;
  std::vector<double> true_loglr;  // objective log-LR
  std::vector<double> test_loglr;  // log-LR under the agent's measure pair

  std::vector<double> p;        // objective conditional probability
  std::vector<double> p_check;  // would-be belief: true prior, agent's evidence
  std::vector<double> pi;       // agent belief

  std::vector<double> err;        // p - pi
  std::vector<double> bias;       // p_check - pi
  std::vector<double> diffusive;  // p - p_check

  std::size_t size() const noexcept { return true_loglr.size(); }
  bool continuous() const noexcept { return time_step > 0.0; }
};

/// Per-time error components, all in belief units.
struct ErrorComponents {
  double total;
  double bias;
  double diffusive;
};

/// Error components from the three log-odds values at one time.
///
/// bias and diffusive are each evaluated without cancellation; total is their
/// floating-point sum, so total == bias + diffusive holds exactly.
inline ErrorComponents error_components(double agent_log_odds, double would_be_log_odds, double true_log_odds) {
  const double bias = belief_gap(agent_log_odds, would_be_log_odds);
  const double diffusive = belief_gap(would_be_log_odds, true_log_odds);
  return {bias + diffusive, bias, diffusive};
}

/// Fills beliefs and error series of a record whose log-LR series and priors
/// are already set.
inline void fill_beliefs_and_errors(PathRecord& r) {
  if (r.true_loglr.size() != r.test_loglr.size()) throw std::invalid_argument("log-LR series lengths differ");
  const double true_prior_lo = log_odds(Belief(r.true_prior));
  const double agent_prior_lo = log_odds(Belief(r.agent_prior));
  const std::size_t n = r.true_loglr.size();
  r.p.resize(n);
  r.p_check.resize(n);
  r.pi.resize(n);
  r.err.resize(n);
  r.bias.resize(n);
  r.diffusive.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x_true = true_prior_lo + r.true_loglr[k];
    const double x_would_be = true_prior_lo + r.test_loglr[k];
    const double x_agent = agent_prior_lo + r.test_loglr[k];
    r.p[k] = belief_from_log_odds(x_true).value();
    r.p_check[k] = belief_from_log_odds(x_would_be).value();
    r.pi[k] = belief_from_log_odds(x_agent).value();
    const auto e = error_components(x_agent, x_would_be, x_true);
    r.err[k] = e.total;
    r.bias[k] = e.bias;
    r.diffusive[k] = e.diffusive;
  }
}

}  // namespace seqtest
