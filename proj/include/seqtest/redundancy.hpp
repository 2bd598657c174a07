#pragma once

// Empirical checks of informational redundancy between two belief processes
// observed on the same data: adjacency of their log-LRs, per-time state maps,
// time-homogeneity of those maps and the power-law form of the odds relation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "seqtest/belief.hpp"
#include "seqtest/measures.hpp"
#include "seqtest/path_record.hpp"

namespace seqtest {

class DegenerateSpan : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CouplingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---- isotonic state map -----------------------------------------------------

/// Monotone nondecreasing fit of y against x (both log-odds).
struct StateMapFit {
  std::vector<double> knots;   // distinct x, ascending
  std::vector<double> values;  // fitted y at each knot
  double residual = 0.0;       // RMS of y - fit(x) over the samples

  double lower() const { return knots.front(); }
  double upper() const { return knots.back(); }

  /// Piecewise-linear interpolation between knots, flat outside.
  double operator()(double x) const {
    if (x <= knots.front()) return values.front();
    if (x >= knots.back()) return values.back();
    const auto it = std::upper_bound(knots.begin(), knots.end(), x);
    const auto hi = static_cast<std::size_t>(it - knots.begin());
    const std::size_t lo = hi - 1;
    const double w = (x - knots[lo]) / (knots[hi] - knots[lo]);
    return values[lo] + w * (values[hi] - values[lo]);
  }
};

struct StateMapOptions {
  std::size_t min_samples = 30;
  double min_span = 0.1;  // width of the x range, log-odds units
};

/// Pool-adjacent-violators fit in log-odds coordinates.
inline StateMapFit fit_state_map_log_odds(std::span<const double> xs, std::span<const double> ys,
                                          const StateMapOptions& opt = {}) {
  if (xs.size() != ys.size()) throw std::invalid_argument("sample columns differ in length");
  if (xs.size() < opt.min_samples) {
    throw DegenerateSpan("need at least " + std::to_string(opt.min_samples) + " samples, got " + std::to_string(xs.size()));
  }
  const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
  if (!(*mx - *mn >= opt.min_span)) throw DegenerateSpan("sample range is too narrow for a state-map fit");

  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });

  struct Block {
    double sum;
    double weight;
    std::size_t first_knot;
    double mean() const { return sum / weight; }
  };
  StateMapFit fit;
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < order.size();) {
    const double x = xs[order[i]];
    double sum = 0.0;
    double weight = 0.0;
    for (; i < order.size() && xs[order[i]] == x; ++i) {
      sum += ys[order[i]];
      weight += 1.0;
    }
    fit.knots.push_back(x);
    blocks.push_back({sum, weight, fit.knots.size() - 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
      const Block top = blocks.back();
      blocks.pop_back();
      blocks.back().sum += top.sum;
      blocks.back().weight += top.weight;
    }
  }
  fit.values.resize(fit.knots.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::size_t end = b + 1 < blocks.size() ? blocks[b + 1].first_knot : fit.knots.size();
    std::fill(fit.values.begin() + static_cast<std::ptrdiff_t>(blocks[b].first_knot),
              fit.values.begin() + static_cast<std::ptrdiff_t>(end), blocks[b].mean());
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto k = static_cast<std::size_t>(std::lower_bound(fit.knots.begin(), fit.knots.end(), xs[i]) - fit.knots.begin());
    const double r = ys[i] - fit.values[k];
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(xs.size()));
  return fit;
}

/// State map pi -> hat_pi from samples at one time, fitted in log-odds.
inline StateMapFit fit_state_map(std::span<const std::pair<Belief, Belief>> samples, const StateMapOptions& opt = {}) {
  std::vector<double> xs;
  std::vector<double> ys;
  xs.reserve(samples.size());
  ys.reserve(samples.size());
  for (const auto& [a, b] : samples) {
    xs.push_back(log_odds(a));
    ys.push_back(log_odds(b));
  }
  return fit_state_map_log_odds(xs, ys, opt);
}

/// sup |f - g| over the overlap of the two fits' supports; nullopt when the
/// supports do not overlap.
inline std::optional<double> map_distance(const StateMapFit& f, const StateMapFit& g) {
  const double lo = std::max(f.lower(), g.lower());
  const double hi = std::min(f.upper(), g.upper());
  if (!(hi > lo)) return std::nullopt;
  double sup = std::max(std::abs(f(lo) - g(lo)), std::abs(f(hi) - g(hi)));
  for (const auto* fit : {&f, &g}) {
    auto it = std::upper_bound(fit->knots.begin(), fit->knots.end(), lo);
    for (; it != fit->knots.end() && *it < hi; ++it) sup = std::max(sup, std::abs(f(*it) - g(*it)));
  }
  return sup;
}

// ---- power law ----------------------------------------------------------------

/// hat_O = c * O^gamma, fitted as a line in (log O, log hat_O).
struct PowerLawFit {
  double gamma;
  double c;
  double residual;  // RMS in log hat_O
};

inline PowerLawFit fit_power_law_log(std::span<const double> log_odds_a, std::span<const double> log_odds_b,
                                     std::size_t min_pairs = 30) {
  if (log_odds_a.size() != log_odds_b.size()) throw std::invalid_argument("sample columns differ in length");
  if (log_odds_a.size() < min_pairs) {
    throw DegenerateSpan("need at least " + std::to_string(min_pairs) + " pairs for a power-law fit");
  }
  const auto [mn, mx] = std::minmax_element(log_odds_a.begin(), log_odds_a.end());
  if (!(*mx - *mn >= std::log(10.0))) throw DegenerateSpan("odds span less than one decade");
  const auto n = static_cast<double>(log_odds_a.size());
  const double mean_a = std::accumulate(log_odds_a.begin(), log_odds_a.end(), 0.0) / n;
  const double mean_b = std::accumulate(log_odds_b.begin(), log_odds_b.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < log_odds_a.size(); ++i) {
    const double dx = log_odds_a[i] - mean_a;
    sxx += dx * dx;
    sxy += dx * (log_odds_b[i] - mean_b);
  }
  const double gamma = sxy / sxx;
  const double intercept = mean_b - gamma * mean_a;
  double ss = 0.0;
  for (std::size_t i = 0; i < log_odds_a.size(); ++i) {
    const double r = log_odds_b[i] - (intercept + gamma * log_odds_a[i]);
    ss += r * r;
  }
  return {gamma, std::exp(intercept), std::sqrt(ss / n)};
}

inline PowerLawFit fit_power_law(std::span<const std::pair<Odds, Odds>> pairs, std::size_t min_pairs = 30) {
  std::vector<double> a;
  std::vector<double> b;
  a.reserve(pairs.size());
  b.reserve(pairs.size());
  for (const auto& [o, hat_o] : pairs) {
    a.push_back(std::log(o.value()));
    b.push_back(std::log(hat_o.value()));
  }
  return fit_power_law_log(a, b, min_pairs);
}

// ---- coupled ensembles ------------------------------------------------------

/// A belief process on each path: log-LR series (index 0 = 0) and its prior.
struct BeliefEnsemble {
  std::vector<std::vector<double>> data;
  std::vector<std::vector<double>> loglr;
  Belief prior;
};

/// pi: agent prior with the test pair's log-LR.
inline BeliefEnsemble agent_ensemble(std::span<const PathRecord> records) {
  BeliefEnsemble e{{}, {}, Belief(records.empty() ? 0.5 : records.front().agent_prior)};
  for (const auto& r : records) {
    e.data.push_back(r.data);
    e.loglr.push_back(r.test_loglr);
  }
  return e;
}

/// p_check: true prior with the test pair's log-LR.
inline BeliefEnsemble would_be_ensemble(std::span<const PathRecord> records) {
  BeliefEnsemble e{{}, {}, Belief(records.empty() ? 0.5 : records.front().true_prior)};
  for (const auto& r : records) {
    e.data.push_back(r.data);
    e.loglr.push_back(r.test_loglr);
  }
  return e;
}

/// p: true prior with the true pair's log-LR.
inline BeliefEnsemble truth_ensemble(std::span<const PathRecord> records) {
  BeliefEnsemble e{{}, {}, Belief(records.empty() ? 0.5 : records.front().true_prior)};
  for (const auto& r : records) {
    e.data.push_back(r.data);
    e.loglr.push_back(r.true_loglr);
  }
  return e;
}

/// A different test pair and prior applied to the recorded data.
inline BeliefEnsemble reevaluated_ensemble(std::span<const PathRecord> records, const MeasurePair& pair, Belief prior) {
  validate(pair);
  BeliefEnsemble e{{}, {}, prior};
  for (const auto& r : records) {
    e.data.push_back(r.data);
    auto l = accumulate_loglr(pair, r.data);
    l.insert(l.begin(), 0.0);
    e.loglr.push_back(std::move(l));
  }
  return e;
}

// ---- verdict ----------------------------------------------------------------

struct RedundancyTolerances {
  double gamma = 0.02;
  double homogeneity = 0.01;
  double trend_ratio = 2.0;
  /// Adjacency sups below this are treated as zero when forming the trend ratio.
  double adjacency_floor = 1e-9;
  /// At most this many fitted times enter the pairwise homogeneity comparison.
  std::size_t homogeneity_times = 64;
  StateMapOptions state_map{};
};

enum class AdjacencyTrend { Bounded, Growing };

constexpr const char* to_string(AdjacencyTrend t) noexcept { return t == AdjacencyTrend::Bounded ? "Bounded" : "Growing"; }

enum class FailedCondition { Adjacency, Homogeneity, Gamma };

constexpr const char* to_string(FailedCondition c) noexcept {
  switch (c) {
    case FailedCondition::Adjacency: return "adjacency";
    case FailedCondition::Homogeneity: return "homogeneity";
    default: return "gamma";
  }
}

struct TimeFit {
  std::size_t step;
  std::size_t samples;
  double state_map_residual;
  bool has_power_law;
  double gamma;
  double c;
  double power_residual;
};

struct Verdict {
  bool redundant;
  double c;  // a priori factor when redundant
  std::vector<FailedCondition> failures;

  bool failed(FailedCondition cond) const {
    return std::find(failures.begin(), failures.end(), cond) != failures.end();
  }
  std::string reason() const {
    if (redundant) return "";
    std::string s;
    for (auto f : failures) s += (s.empty() ? "" : ",") + std::string(to_string(f));
    return s;
  }
};

struct RedundancyReport {
  double adjacency_sup;
  double adjacency_first_quarter;
  double adjacency_last_quarter;
  double trend_ratio;
  AdjacencyTrend adjacency_trend;
  std::vector<TimeFit> state_map_fits;
  std::size_t homogeneity_pairs;  // time pairs with overlapping support
  double homogeneity_stat;        // NaN when no pair could be compared
  bool power_law_available;
  double gamma;
  double c;
  double fit_residual;
  Verdict verdict;
};

namespace detail {

inline void check_coupled(const BeliefEnsemble& a, const BeliefEnsemble& b) {
  if (a.loglr.size() != b.loglr.size() || a.data.size() != b.data.size() || a.loglr.size() != a.data.size()) {
    throw CouplingError("ensembles have different numbers of paths");
  }
  if (a.loglr.empty()) throw CouplingError("ensembles are empty");
  const std::size_t len = a.loglr.front().size();
  for (std::size_t i = 0; i < a.loglr.size(); ++i) {
    if (a.data[i] != b.data[i]) throw CouplingError("path " + std::to_string(i) + " was not generated from shared data");
    if (a.loglr[i].size() != len || b.loglr[i].size() != len) throw CouplingError("paths differ in length");
  }
  if (len < 2) throw CouplingError("paths need at least one step");
}

}  // namespace detail

/// Assembles the adjacency, state-map, homogeneity and power-law diagnostics
/// for `hat` against `base`, and the resulting verdict.
///
/// Adjacency is judged on a finite horizon by comparing the largest gap in the
/// last quarter of the horizon to the largest gap in the first quarter.
inline RedundancyReport redundancy_verdict(const BeliefEnsemble& base, const BeliefEnsemble& hat,
                                           const RedundancyTolerances& tol = {}) {
  detail::check_coupled(base, hat);
  const std::size_t paths = base.loglr.size();
  const std::size_t horizon = base.loglr.front().size() - 1;
  const double prior_base = log_odds(base.prior);
  const double prior_hat = log_odds(hat.prior);

  RedundancyReport rep{};

  // adjacency
  const std::size_t quarter = std::max<std::size_t>(1, horizon / 4);
  double sup = 0.0;
  double first = 0.0;
  double last = 0.0;
  for (std::size_t i = 0; i < paths; ++i) {
    const auto gap = loglr_difference(base.loglr[i], hat.loglr[i]);
    for (std::size_t n = 1; n <= horizon; ++n) {
      const double g = std::abs(gap[n]);
      sup = std::max(sup, g);
      if (n <= quarter) first = std::max(first, g);
      if (n > horizon - quarter) last = std::max(last, g);
    }
  }
  rep.adjacency_sup = sup;
  rep.adjacency_first_quarter = first;
  rep.adjacency_last_quarter = last;
  const double first_f = first < tol.adjacency_floor ? 0.0 : first;
  const double last_f = last < tol.adjacency_floor ? 0.0 : last;
  rep.trend_ratio = first_f > 0.0 ? last_f / first_f : (last_f > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  rep.adjacency_trend = rep.trend_ratio < tol.trend_ratio ? AdjacencyTrend::Bounded : AdjacencyTrend::Growing;

  // per-time fits
  std::vector<StateMapFit> fits;
  std::vector<double> xs(paths);
  std::vector<double> ys(paths);
  std::vector<double> pooled_x;
  std::vector<double> pooled_y;
  pooled_x.reserve(paths * horizon);
  pooled_y.reserve(paths * horizon);
  for (std::size_t n = 1; n <= horizon; ++n) {
    for (std::size_t i = 0; i < paths; ++i) {
      xs[i] = prior_base + base.loglr[i][n];
      ys[i] = prior_hat + hat.loglr[i][n];
    }
    pooled_x.insert(pooled_x.end(), xs.begin(), xs.end());
    pooled_y.insert(pooled_y.end(), ys.begin(), ys.end());
    StateMapFit fit;
    try {
      fit = fit_state_map_log_odds(xs, ys, tol.state_map);
    } catch (const DegenerateSpan&) {
      continue;
    }
    TimeFit tf{n, paths, fit.residual, false, std::nan(""), std::nan(""), std::nan("")};
    try {
      const auto pl = fit_power_law_log(xs, ys, tol.state_map.min_samples);
      tf.has_power_law = true;
      tf.gamma = pl.gamma;
      tf.c = pl.c;
      tf.power_residual = pl.residual;
    } catch (const DegenerateSpan&) {
    }
    rep.state_map_fits.push_back(tf);
    fits.push_back(std::move(fit));
  }

  // homogeneity across an evenly thinned set of fitted times
  std::vector<std::size_t> chosen;
  if (!fits.empty()) {
    const std::size_t m = std::min(tol.homogeneity_times, fits.size());
    for (std::size_t j = 0; j < m; ++j) {
      chosen.push_back(m == 1 ? 0 : j * (fits.size() - 1) / (m - 1));
    }
    chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
  }
  double homogeneity = 0.0;
  std::size_t compared = 0;
  for (std::size_t a = 0; a < chosen.size(); ++a) {
    for (std::size_t b = a + 1; b < chosen.size(); ++b) {
      if (auto d = map_distance(fits[chosen[a]], fits[chosen[b]])) {
        homogeneity = std::max(homogeneity, *d);
        ++compared;
      }
    }
  }
  rep.homogeneity_pairs = compared;
  rep.homogeneity_stat = compared > 0 ? homogeneity : std::nan("");

  // pooled power law
  try {
    const auto pl = fit_power_law_log(pooled_x, pooled_y, tol.state_map.min_samples);
    rep.power_law_available = true;
    rep.gamma = pl.gamma;
    rep.c = pl.c;
    rep.fit_residual = pl.residual;
  } catch (const DegenerateSpan&) {
    rep.power_law_available = false;
    rep.gamma = rep.c = rep.fit_residual = std::nan("");
  }

  Verdict v{true, rep.c, {}};
  if (rep.adjacency_trend == AdjacencyTrend::Growing) v.failures.push_back(FailedCondition::Adjacency);
  if (!(rep.homogeneity_stat < tol.homogeneity)) v.failures.push_back(FailedCondition::Homogeneity);
  if (!(std::abs(rep.gamma - 1.0) < tol.gamma)) v.failures.push_back(FailedCondition::Gamma);
  v.redundant = v.failures.empty();
  rep.verdict = v;
  return rep;
}

// ---- Ito ODE ------------------------------------------------------------------

struct ItoOdeResult {
  double max_deviation;
  double numeric_end;      // g(x_max) from the integrator
  double closed_form_end;  // g(x_max) from the closed form
};

/// Closed-form time-homogeneous redundancy map between two regular log-LR
/// processes sharing their Wiener noise, with g(0) = 0.
inline double ito_closed_form(double gprime0, Outcome branch, double x) {
  if (branch == Outcome::b) return -std::log(gprime0 * std::exp(-x) + 1.0 - gprime0);
  return std::log(gprime0 * std::exp(x) + 1.0 - gprime0);
}

/// Integrates g'' = -(-1)^{1{B=b}} (g' - 1) g' by classical RK4 from
/// g(0) = 0, g'(0) = gprime0 and returns the sup deviation from the closed form
/// over the grid nodes on [0, x_max].
inline ItoOdeResult ito_ode_check(double gprime0, Outcome branch, double x_max, double step = 1e-4) {
  if (!(gprime0 > 0.0) || gprime0 > 1.0) throw std::domain_error("g'(0) must lie in (0, 1]");
  if (!(x_max > 0.0) || !(step > 0.0)) throw std::domain_error("x_max and step must be positive");
  // branch b: g'' = (g' - 1) g'; branch bbar: g'' = -(g' - 1) g'
  const double s = branch == Outcome::b ? 1.0 : -1.0;
  auto accel = [s](double gp) { return s * (gp - 1.0) * gp; };

  const auto steps = static_cast<std::size_t>(std::ceil(x_max / step - 1e-12));
  double g = 0.0;
  double gp = gprime0;
  double x = 0.0;
  double dev = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double h = std::min(step, x_max - x);
    const double k1g = gp;
    const double k1p = accel(gp);
    const double k2g = gp + 0.5 * h * k1p;
    const double k2p = accel(gp + 0.5 * h * k1p);
    const double k3g = gp + 0.5 * h * k2p;
    const double k3p = accel(gp + 0.5 * h * k2p);
    const double k4g = gp + h * k3p;
    const double k4p = accel(gp + h * k3p);
    g += h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
    gp += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    x = k + 1 == steps ? x_max : x + h;
    dev = std::max(dev, std::abs(g - ito_closed_form(gprime0, branch, x)));
  }
  return {dev, g, ito_closed_form(gprime0, branch, x_max)};
}

// ---- path-dependency witnesses ------------------------------------------------

struct Witness {
  std::size_t path_1;
  std::size_t time_1;
  std::size_t path_2;
  std::size_t time_2;
  double pi_gap;
  double p_gap;
};

struct WitnessSet {
  double epsilon;
  double delta;
  std::uint64_t total;  // all witnessing pairs, including ones not listed
  std::vector<Witness> entries;
  bool truncated() const noexcept { return total > entries.size(); }
  bool empty() const noexcept { return total == 0; }
};

/// Which series plays the state variable against the agent belief pi.
enum class StateVariable { Objective, WouldBe };

/// All unordered pairs of (path, time) points whose agent beliefs are within
/// epsilon while their state beliefs differ by at least delta. At most
/// `max_entries` are listed; `total` counts all of them.
inline WitnessSet path_dependency_witness(std::span<const PathRecord> records, double epsilon, double delta,
                                          StateVariable state = StateVariable::Objective,
                                          std::size_t max_entries = 10000) {
  if (!(epsilon > 0.0) || !(delta > epsilon)) throw std::domain_error("need 0 < epsilon < delta");
  struct Point {
    double pi;
    double p;
    std::uint32_t path;
    std::uint32_t time;
  };
  std::vector<Point> pts;
  for (const auto& r : records) {
    const auto& sv = state == StateVariable::Objective ? r.p : r.p_check;
    for (std::size_t t = 0; t < r.pi.size(); ++t) {
      pts.push_back({r.pi[t], sv[t], static_cast<std::uint32_t>(r.path_index), static_cast<std::uint32_t>(t)});
    }
  }
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return std::tie(a.pi, a.path, a.time) < std::tie(b.pi, b.path, b.time);
  });

  // Fenwick tree over ranks of p for counting; ordered set for listing.
  std::vector<double> sorted_p(pts.size());
  std::transform(pts.begin(), pts.end(), sorted_p.begin(), [](const Point& q) { return q.p; });
  std::sort(sorted_p.begin(), sorted_p.end());
  sorted_p.erase(std::unique(sorted_p.begin(), sorted_p.end()), sorted_p.end());
  std::vector<std::int64_t> tree(sorted_p.size() + 1, 0);
  auto add = [&](std::size_t rank, std::int64_t v) {
    for (std::size_t i = rank + 1; i < tree.size(); i += i & (~i + 1)) tree[i] += v;
  };
  auto prefix = [&](std::size_t count) {  // number of window points with rank < count
    std::int64_t s = 0;
    for (std::size_t i = count; i > 0; i -= i & (~i + 1)) s += tree[i];
    return s;
  };
  auto rank_of = [&](double p) {
    return static_cast<std::size_t>(std::lower_bound(sorted_p.begin(), sorted_p.end(), p) - sorted_p.begin());
  };

  WitnessSet out{epsilon, delta, 0, {}};
  std::multiset<std::pair<double, std::size_t>> window;
  std::size_t front = 0;
  std::int64_t in_window = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (pts[i].pi - pts[front].pi > epsilon) {
      add(rank_of(pts[front].p), -1);
      window.erase(window.find({pts[front].p, front}));
      --in_window;
      ++front;
    }
    const double lo = pts[i].p - delta;
    const double hi = pts[i].p + delta;
    const auto below = prefix(static_cast<std::size_t>(std::upper_bound(sorted_p.begin(), sorted_p.end(), lo) - sorted_p.begin()));
    const auto above = in_window - prefix(rank_of(hi));
    out.total += static_cast<std::uint64_t>(below + above);

    auto record = [&](std::size_t j) {
      out.entries.push_back({pts[j].path, pts[j].time, pts[i].path, pts[i].time, std::abs(pts[i].pi - pts[j].pi),
                             std::abs(pts[i].p - pts[j].p)});
    };
    for (auto it = window.begin(); it != window.end() && it->first <= lo && out.entries.size() < max_entries; ++it) {
      record(it->second);
    }
    for (auto it = window.lower_bound({hi, 0}); it != window.end() && out.entries.size() < max_entries; ++it) {
      record(it->second);
    }
    add(rank_of(pts[i].p), 1);
    window.insert({pts[i].p, i});
    ++in_window;
  }
  return out;
}

}  // namespace seqtest
