#pragma once

// Parametric measure pairs (Q_b, Q_bbar) over per-datum values.
//
// A pair fixes, at every step n, a density for the n-th datum under each
// outcome. Log-LR increments are evaluated in closed form per family; no
// numerical density evaluation happens anywhere in this header.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace seqtest {

enum class Outcome { b, bbar };

constexpr double outcome_sign(Outcome o) noexcept { return o == Outcome::b ? 1.0 : -1.0; }
constexpr const char* to_string(Outcome o) noexcept { return o == Outcome::b ? "b" : "bbar"; }

/// i.i.d. normal data with a shared standard deviation.
struct GaussianIID {
  double mean_b;
  double mean_bbar;
  double stdev;
};

/// i.i.d. {0,1} data.
struct BernoulliIID {
  double prob_b;
  double prob_bbar;
};

/// Independent normal data with per-step parameters. Entry k describes step k+1.
struct GaussianSchedule {
  std::vector<double> mean_b;
  std::vector<double> mean_bbar;
  std::vector<double> stdev;
};

using MeasurePair = std::variant<GaussianIID, BernoulliIID, GaussianSchedule>;

enum class TestKind { Regular, NonResolving };

constexpr const char* to_string(TestKind k) noexcept { return k == TestKind::Regular ? "Regular" : "NonResolving"; }

struct TestClass {
  TestKind kind;
  /// Bhattacharyya coefficient of one step's marginals (geometric mean over
  /// the horizon for schedules).
  double hellinger_affinity_per_step;
  /// Product of per-step affinities over the tabulated horizon; 0 for i.i.d.
  /// families with distinct marginals, 1 for identical ones.
  double horizon_affinity;
  /// True when the verdict rests on a finite horizon (schedules only).
  bool horizon_limited;
};

class MeasureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

template <class>
inline constexpr bool kAlwaysFalse = false;

inline bool valid_probability(double p) { return p > 0.0 && p < 1.0; }

struct GaussianStep {
  double mean_b;
  double mean_bbar;
  double stdev;
};

inline GaussianStep schedule_step(const GaussianSchedule& s, std::size_t step) {
  if (step == 0) throw std::out_of_range("steps are numbered from 1");
  if (step > s.mean_b.size()) {
    throw std::out_of_range("step " + std::to_string(step) + " beyond schedule of length " +
                            std::to_string(s.mean_b.size()));
  }
  return {s.mean_b[step - 1], s.mean_bbar[step - 1], s.stdev[step - 1]};
}

inline GaussianStep gaussian_step(const MeasurePair& pair, std::size_t step) {
  if (const auto* g = std::get_if<GaussianIID>(&pair)) return {g->mean_b, g->mean_bbar, g->stdev};
  return schedule_step(std::get<GaussianSchedule>(pair), step);
}

inline double gaussian_increment(const GaussianStep& g, double datum) {
  const double var = g.stdev * g.stdev;
  return (g.mean_b - g.mean_bbar) / var * (datum - 0.5 * (g.mean_b + g.mean_bbar));
}

inline double gaussian_affinity(const GaussianStep& g) {
  const double d = g.mean_b - g.mean_bbar;
  return std::exp(-d * d / (8.0 * g.stdev * g.stdev));
}

inline void check_bernoulli_datum(double datum) {
  if (datum != 0.0 && datum != 1.0) {
    throw std::domain_error("Bernoulli datum must be 0 or 1, got " + std::to_string(datum));
  }
}

}  // namespace detail

/// Throws MeasureError when a pair violates its family's invariants.
inline void validate(const MeasurePair& pair) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GaussianIID>) {
          if (!(p.stdev > 0.0) || !std::isfinite(p.stdev)) throw MeasureError("GaussianIID stdev must be positive");
          if (!std::isfinite(p.mean_b) || !std::isfinite(p.mean_bbar)) throw MeasureError("GaussianIID means must be finite");
        } else if constexpr (std::is_same_v<T, BernoulliIID>) {
          if (!detail::valid_probability(p.prob_b) || !detail::valid_probability(p.prob_bbar)) {
            throw MeasureError("BernoulliIID probabilities must lie in (0,1)");
          }
        } else if constexpr (std::is_same_v<T, GaussianSchedule>) {
          if (p.mean_b.empty()) throw MeasureError("GaussianSchedule is empty");
          if (p.mean_bbar.size() != p.mean_b.size() || p.stdev.size() != p.mean_b.size()) {
            throw MeasureError("GaussianSchedule columns have different lengths");
          }
          for (std::size_t k = 0; k < p.stdev.size(); ++k) {
            if (!(p.stdev[k] > 0.0) || !std::isfinite(p.stdev[k])) throw MeasureError("GaussianSchedule stdev must be positive");
            if (!std::isfinite(p.mean_b[k]) || !std::isfinite(p.mean_bbar[k])) {
              throw MeasureError("GaussianSchedule means must be finite");
            }
          }
        } else {
          static_assert(detail::kAlwaysFalse<T>);
        }
      },
      pair);
}

/// Number of tabulated steps, or nullopt for i.i.d. families.
inline std::optional<std::size_t> schedule_length(const MeasurePair& pair) {
  if (const auto* s = std::get_if<GaussianSchedule>(&pair)) return s->mean_b.size();
  return std::nullopt;
}

inline bool is_bernoulli(const MeasurePair& pair) { return std::holds_alternative<BernoulliIID>(pair); }

/// log q_b(datum) - log q_bbar(datum) at a 1-based step.
inline double loglr_increment(const MeasurePair& pair, std::size_t step, double datum) {
  if (const auto* ber = std::get_if<BernoulliIID>(&pair)) {
    detail::check_bernoulli_datum(datum);
    return datum == 1.0 ? std::log(ber->prob_b) - std::log(ber->prob_bbar)
                        : std::log1p(-ber->prob_b) - std::log1p(-ber->prob_bbar);
  }
  if (!std::isfinite(datum)) throw std::domain_error("datum must be finite");
  return detail::gaussian_increment(detail::gaussian_step(pair, step), datum);
}

/// log density of the datum at a 1-based step under the given outcome's marginal.
inline double log_density(const MeasurePair& pair, std::size_t step, Outcome which, double datum) {
  if (const auto* ber = std::get_if<BernoulliIID>(&pair)) {
    detail::check_bernoulli_datum(datum);
    const double p = which == Outcome::b ? ber->prob_b : ber->prob_bbar;
    return datum == 1.0 ? std::log(p) : std::log1p(-p);
  }
  const auto g = detail::gaussian_step(pair, step);
  const double mean = which == Outcome::b ? g.mean_b : g.mean_bbar;
  const double z = (datum - mean) / g.stdev;
  return -0.5 * z * z - std::log(g.stdev) - 0.5 * std::log(2.0 * std::numbers::pi);
}

/// Draws the datum for a 1-based step from the marginal of `outcome`.
template <class Rng>
double sample_datum(const MeasurePair& pair, std::size_t step, Outcome outcome, Rng& rng) {
  if (const auto* ber = std::get_if<BernoulliIID>(&pair)) {
    const double p = outcome == Outcome::b ? ber->prob_b : ber->prob_bbar;
    return std::generate_canonical<double, 53>(rng) < p ? 1.0 : 0.0;
  }
  const auto g = detail::gaussian_step(pair, step);
  std::normal_distribution<double> normal(outcome == Outcome::b ? g.mean_b : g.mean_bbar, g.stdev);
  return normal(rng);
}

/// Kakutani-style classification from per-step Hellinger affinities.
///
/// For i.i.d. families the product over infinitely many steps is 0 unless the
/// marginals coincide, so the verdict is exact. Schedules are classified on
/// their tabulated horizon: Regular when the affinity product drops below
/// `regular_threshold`.
inline TestClass classify_pair(const MeasurePair& pair, double regular_threshold = 1e-6) {
  validate(pair);
  if (const auto* g = std::get_if<GaussianIID>(&pair)) {
    const bool same = g->mean_b == g->mean_bbar;
    return {same ? TestKind::NonResolving : TestKind::Regular, detail::gaussian_affinity({g->mean_b, g->mean_bbar, g->stdev}),
            same ? 1.0 : 0.0, false};
  }
  if (const auto* ber = std::get_if<BernoulliIID>(&pair)) {
    const bool same = ber->prob_b == ber->prob_bbar;
    const double affinity = same ? 1.0
                                 : std::sqrt(ber->prob_b * ber->prob_bbar) +
                                       std::sqrt((1.0 - ber->prob_b) * (1.0 - ber->prob_bbar));
    return {same ? TestKind::NonResolving : TestKind::Regular, affinity, same ? 1.0 : 0.0, false};
  }
  const auto& s = std::get<GaussianSchedule>(pair);
  double log_product = 0.0;
  bool identical = true;
  for (std::size_t k = 0; k < s.mean_b.size(); ++k) {
    const double d = s.mean_b[k] - s.mean_bbar[k];
    identical = identical && d == 0.0;
    log_product -= d * d / (8.0 * s.stdev[k] * s.stdev[k]);
  }
  const double product = std::exp(log_product);
  const double per_step = std::exp(log_product / static_cast<double>(s.mean_b.size()));
  const TestKind kind = !identical && product < regular_threshold ? TestKind::Regular : TestKind::NonResolving;
  return {kind, per_step, product, true};
}

/// Running log-LR l_1..l_n of a pair on a data string (l_0 = 0 is implicit).
inline std::vector<double> accumulate_loglr(const MeasurePair& pair, std::span<const double> data) {
  std::vector<double> out(data.size());
  double l = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    l += loglr_increment(pair, i + 1, data[i]);
    out[i] = l;
  }
  return out;
}

/// Termwise hat_l - l for two log-LR series of equal length.
inline std::vector<double> loglr_difference(std::span<const double> loglr, std::span<const double> hat_loglr) {
  if (loglr.size() != hat_loglr.size()) throw std::invalid_argument("log-LR series have different lengths");
  std::vector<double> out(loglr.size());
  for (std::size_t i = 0; i < loglr.size(); ++i) out[i] = hat_loglr[i] - loglr[i];
  return out;
}

/// Running gap hat_l_n - l_n where hat_l uses `hat_pair` and l uses `pair`,
/// both accumulated on the same data.
inline std::vector<double> adjacency_gap(const MeasurePair& pair, const MeasurePair& hat_pair,
                                         std::span<const double> data) {
  return loglr_difference(accumulate_loglr(pair, data), accumulate_loglr(hat_pair, data));
}

/// Same gap evaluated as log(dhatQ_b/dQ_b) - log(dhatQ_bbar/dQ_bbar) on the
/// first n coordinates. Agrees with adjacency_gap up to rounding.
inline std::vector<double> adjacency_gap_by_densities(const MeasurePair& pair, const MeasurePair& hat_pair,
                                                      std::span<const double> data) {
  std::vector<double> out(data.size());
  double rn_b = 0.0;
  double rn_bbar = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t step = i + 1;
    rn_b += log_density(hat_pair, step, Outcome::b, data[i]) - log_density(pair, step, Outcome::b, data[i]);
    rn_bbar += log_density(hat_pair, step, Outcome::bbar, data[i]) - log_density(pair, step, Outcome::bbar, data[i]);
    out[i] = rn_b - rn_bbar;
  }
  return out;
}

}  // namespace seqtest
