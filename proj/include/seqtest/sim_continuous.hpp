#pragma once

// Continuous-time log-LR processes
//
//   dl_t = (+/-) sigma_t^2 / 2 dt + sigma_t dw_t
//
// simulated by Euler-Maruyama on a uniform grid, optionally on a compactified
// clock tau(t) = t / (T - t) that brings resolution forward to T. Also the
// drifted-Brownian observation model used to build a misspecified agent.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "seqtest/belief.hpp"
#include "seqtest/measures.hpp"
#include "seqtest/parallel.hpp"
#include "seqtest/path_record.hpp"

namespace seqtest {

struct TimeGrid {
  double dt;
  std::size_t steps;

  double time_at(std::size_t k) const noexcept { return static_cast<double>(k) * dt; }
  double horizon() const noexcept { return time_at(steps); }
};

struct IdentityClock {};

/// tau(t) = t / (T - t): tau(0) = 0 and tau(T-) = infinity.
struct CompactifyClock {
  double resolution_time;

  double tau(double t) const noexcept { return t / (resolution_time - t); }
};

using Clock = std::variant<IdentityClock, CompactifyClock>;

struct SdeSpec {
  /// sigma per grid step; a single entry is held constant.
  std::vector<double> signal_to_noise;
  Clock clock;
  TimeGrid grid;
  Outcome outcome;
  std::uint64_t master_seed;
};

class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void validate(const SdeSpec& spec) {
  if (!(spec.grid.dt > 0.0) || !std::isfinite(spec.grid.dt)) throw GridError("grid step must be positive");
  if (spec.grid.steps < 1) throw GridError("grid needs at least one step");
  if (spec.signal_to_noise.size() != 1 && spec.signal_to_noise.size() != spec.grid.steps) {
    throw GridError("signal-to-noise schedule has " + std::to_string(spec.signal_to_noise.size()) +
                    " entries for " + std::to_string(spec.grid.steps) + " steps");
  }
  for (double s : spec.signal_to_noise) {
    if (!(s > 0.0) || !std::isfinite(s)) throw GridError("signal-to-noise must be positive and finite");
  }
  if (const auto* c = std::get_if<CompactifyClock>(&spec.clock)) {
    if (!(c->resolution_time > 0.0)) throw GridError("resolution time must be positive");
    if (spec.grid.horizon() >= c->resolution_time) {
      throw GridError("grid reaches the resolution time " + std::to_string(c->resolution_time));
    }
  }
}

/// Variance of the log-LR increment over each grid step, sigma_k^2 dt on the
/// identity clock. On the compactified clock the step spans
/// tau(t_{k+1}) - tau(t_k) units of operational time.
inline std::vector<double> step_variances(const SdeSpec& spec) {
  validate(spec);
  std::vector<double> v(spec.grid.steps);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double s = spec.signal_to_noise.size() == 1 ? spec.signal_to_noise[0] : spec.signal_to_noise[k];
    double clock_span = spec.grid.dt;
    if (const auto* c = std::get_if<CompactifyClock>(&spec.clock)) {
      clock_span = c->tau(spec.grid.time_at(k + 1)) - c->tau(spec.grid.time_at(k));
    }
    v[k] = s * s * clock_span;
  }
  return v;
}

/// Euler-Maruyama path driven by the given standard normal draws, one per
/// step. Returns l on the grid, l[0] = 0.
inline std::vector<double> integrate_loglr(const SdeSpec& spec, std::span<const double> normals) {
  const auto var = step_variances(spec);
  if (normals.size() != var.size()) throw GridError("need one normal draw per grid step");
  const double sign = outcome_sign(spec.outcome);
  std::vector<double> l(var.size() + 1, 0.0);
  for (std::size_t k = 0; k < var.size(); ++k) {
    l[k + 1] = l[k] + sign * 0.5 * var[k] + std::sqrt(var[k]) * normals[k];
  }
  return l;
}

inline std::vector<double> standard_normals(std::uint64_t master_seed, std::size_t path_index, std::size_t count) {
  Engine rng = path_engine(master_seed, path_index);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(count);
  for (double& x : z) x = normal(rng);
  return z;
}

inline std::vector<double> simulate_loglr_sde(const SdeSpec& spec, std::size_t path_index = 0) {
  validate(spec);
  return integrate_loglr(spec, standard_normals(spec.master_seed, path_index, spec.grid.steps));
}

/// l at the requested grid indices for each of `paths` paths; result[path][j].
inline std::vector<std::vector<double>> sample_loglr(const SdeSpec& spec, std::size_t paths,
                                                     std::span<const std::size_t> grid_indices, unsigned threads = 1) {
  validate(spec);
  for (auto k : grid_indices) {
    if (k > spec.grid.steps) throw GridError("requested grid index beyond horizon");
  }
  std::vector<std::vector<double>> out(paths);
  parallel_for(paths, threads, [&](std::size_t i) {
    const auto l = simulate_loglr_sde(spec, i);
    out[i].reserve(grid_indices.size());
    for (auto k : grid_indices) out[i].push_back(l[k]);
  });
  return out;
}

// ---- misspecified filter ----------------------------------------------------

/// Observation model d xi = (+/-) theta dt + sigma_obs dW; the agent believes
/// the drift is theta_hat and the noise sigma_obs_hat.
struct FilterSpec {
  double true_drift;
  double agent_drift;
  double obs_noise;
  double agent_obs_noise;

  /// 2 theta / sigma_obs
  double true_signal_to_noise() const noexcept { return 2.0 * true_drift / obs_noise; }
  /// 2 theta_hat / sigma_obs_hat
  double agent_signal_to_noise() const noexcept { return 2.0 * agent_drift / agent_obs_noise; }
};

inline void validate(const FilterSpec& f) {
  if (!(f.obs_noise > 0.0) || !(f.agent_obs_noise > 0.0)) throw std::invalid_argument("observation noise must be positive");
  if (!std::isfinite(f.true_drift) || !std::isfinite(f.agent_drift)) throw std::invalid_argument("drifts must be finite");
}

struct FilterPath {
  std::vector<double> observations;  // d xi per step
  std::vector<double> true_loglr;
  std::vector<double> agent_loglr;
};

/// Both log-LRs are linear functionals of the same observation path.
inline FilterPath filter_from_normals(const FilterSpec& f, const TimeGrid& grid, Outcome outcome,
                                      std::span<const double> normals) {
  validate(f);
  if (normals.size() != grid.steps) throw GridError("need one normal draw per grid step");
  const double sign = outcome_sign(outcome);
  const double sqrt_dt = std::sqrt(grid.dt);
  const double true_gain = 2.0 * f.true_drift / (f.obs_noise * f.obs_noise);
  const double agent_gain = 2.0 * f.agent_drift / (f.agent_obs_noise * f.agent_obs_noise);
  FilterPath out;
  out.observations.resize(grid.steps);
  out.true_loglr.assign(grid.steps + 1, 0.0);
  out.agent_loglr.assign(grid.steps + 1, 0.0);
  for (std::size_t k = 0; k < grid.steps; ++k) {
    const double dxi = sign * f.true_drift * grid.dt + f.obs_noise * sqrt_dt * normals[k];
    out.observations[k] = dxi;
    out.true_loglr[k + 1] = out.true_loglr[k] + true_gain * dxi;
    out.agent_loglr[k + 1] = out.agent_loglr[k] + agent_gain * dxi;
  }
  return out;
}

inline FilterPath misspecified_filter(const FilterSpec& f, const TimeGrid& grid, Outcome outcome,
                                      std::uint64_t master_seed, std::size_t path_index = 0) {
  if (!(grid.dt > 0.0) || grid.steps < 1) throw GridError("invalid grid");
  return filter_from_normals(f, grid, outcome, standard_normals(master_seed, path_index, grid.steps));
}

/// E[true_l_t - agent_l_t] under the realized outcome's sign convention:
/// (s_true^2 - s_true s_agent sigma_obs / sigma_obs_hat) t / 2, with the sign
/// flipped under bbar.
inline double expected_filter_gap(const FilterSpec& f, double t, Outcome outcome = Outcome::b) {
  const double st = f.true_signal_to_noise();
  const double sa = f.agent_signal_to_noise();
  return outcome_sign(outcome) * (st * st - st * sa * (f.obs_noise / f.agent_obs_noise)) * t / 2.0;
}

/// Continuous-time path record: p from (p_0, true log-LR), p_check from
/// (p_0, agent log-LR), pi from (pi_0, agent log-LR).
inline PathRecord filter_path_record(const FilterSpec& f, const TimeGrid& grid, Outcome outcome, Belief true_prior,
                                     Belief agent_prior, std::uint64_t master_seed, std::size_t path_index) {
  auto fp = misspecified_filter(f, grid, outcome, master_seed, path_index);
  PathRecord r;
  r.path_index = path_index;
  r.outcome = outcome;
  r.time_step = grid.dt;
  r.true_prior = true_prior.value();
  r.agent_prior = agent_prior.value();
  r.data = std::move(fp.observations);
  r.true_loglr = std::move(fp.true_loglr);
  r.test_loglr = std::move(fp.agent_loglr);
  fill_beliefs_and_errors(r);
  return r;
}

/// Path record for a single SDE log-LR process shared by truth and agent;
/// `data` holds the log-LR increments.
inline PathRecord sde_path_record(const SdeSpec& spec, Belief true_prior, Belief agent_prior, std::size_t path_index) {
  PathRecord r;
  r.path_index = path_index;
  r.outcome = spec.outcome;
  r.time_step = spec.grid.dt;
  r.true_prior = true_prior.value();
  r.agent_prior = agent_prior.value();
  r.true_loglr = simulate_loglr_sde(spec, path_index);
  r.test_loglr = r.true_loglr;
  r.data.resize(spec.grid.steps);
  for (std::size_t k = 0; k < spec.grid.steps; ++k) r.data[k] = r.true_loglr[k + 1] - r.true_loglr[k];
  fill_beliefs_and_errors(r);
  return r;
}

// ---- drift integral ---------------------------------------------------------

/// Trapezoidal integral of sigma_true(s)^2 - sigma_agent(s)^2 over [0, t].
/// Schedules hold node values at s = k dt, k = 0..K; t must sit on a node.
inline double drift_integral(std::span<const double> true_sigma, std::span<const double> agent_sigma, double dt,
                             double t) {
  if (true_sigma.size() != agent_sigma.size()) throw GridError("schedules are on different grids");
  if (!(dt > 0.0)) throw GridError("grid step must be positive");
  if (t < 0.0) throw GridError("integration time must be non-negative");
  const double nodes = t / dt;
  const auto last = static_cast<std::size_t>(std::llround(nodes));
  if (std::abs(nodes - static_cast<double>(last)) > 1e-9 * std::max(1.0, nodes)) {
    throw GridError("integration time is not on the grid");
  }
  if (last >= true_sigma.size()) throw GridError("integration time beyond the tabulated schedule");
  for (std::size_t k = 0; k <= last; ++k) {
    if (!(true_sigma[k] > 0.0) || !(agent_sigma[k] > 0.0)) throw GridError("schedules must be positive");
  }
  auto f = [&](std::size_t k) { return true_sigma[k] * true_sigma[k] - agent_sigma[k] * agent_sigma[k]; };
  double acc = 0.0;
  for (std::size_t k = 0; k < last; ++k) acc += 0.5 * (f(k) + f(k + 1)) * dt;
  return acc;
}

}  // namespace seqtest
