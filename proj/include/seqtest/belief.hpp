#pragma once

// Beliefs, odds and the Bayes odds recursion for a binary outcome.
//
// Chained updates are carried in log-odds; conversion back to a Belief only
// happens when a value is reported. Beliefs never take the values 0 or 1:
// outcome resolution shows up as divergent log-odds, not as a saturated
// probability.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace seqtest {

/// Probability of the outcome b, strictly inside (0, 1).
class Belief {
 public:
  explicit Belief(double value) : value_(value) {
    if (!(value > 0.0 && value < 1.0)) {
      throw std::domain_error("belief must lie in the open interval (0,1), got " + std::to_string(value));
    }
  }
  double value() const noexcept { return value_; }
  double complement() const noexcept { return 1.0 - value_; }

  friend bool operator==(Belief, Belief) = default;

 private:
  double value_;
};

/// Odds-for-b, b-probability over bbar-probability. Strictly positive and finite.
class Odds {
 public:
  explicit Odds(double value) : value_(value) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw std::domain_error("odds must be positive and finite, got " + std::to_string(value));
    }
  }
  double value() const noexcept { return value_; }

  friend bool operator==(Odds, Odds) = default;

 private:
  double value_;
};

namespace detail {

// Largest double below one, smallest positive normal double.
inline constexpr double kBeliefCeil = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
inline constexpr double kBeliefFloor = std::numeric_limits<double>::min();

inline double clamp_open_unit(double x) noexcept {
  if (x >= 1.0) return kBeliefCeil;
  if (x < kBeliefFloor) return kBeliefFloor;
  return x;
}

}  // namespace detail

inline Odds odds_of(Belief b) { return Odds(b.value() / b.complement()); }

/// Inverse of odds_of. Odds so large that o/(1+o) rounds to one are mapped to
/// the largest representable belief below one.
inline Belief belief_of(Odds o) { return Belief(detail::clamp_open_unit(o.value() / (1.0 + o.value()))); }

/// Posterior odds from prior odds and a likelihood ratio.
inline Odds bayes_update(Odds prior, double likelihood_ratio) {
  if (!(likelihood_ratio > 0.0) || !std::isfinite(likelihood_ratio)) {
    throw std::domain_error("likelihood ratio must be positive and finite");
  }
  const double posterior = prior.value() * likelihood_ratio;
  if (!(posterior > 0.0) || !std::isfinite(posterior)) {
    throw std::range_error("posterior odds left the representable range; chain updates in log-odds instead");
  }
  return Odds(posterior);
}

/// sqrt(b (1 - b)); peaks at 0.5 for b = 0.5.
inline double sigma(Belief b) { return std::sqrt(b.value() * b.complement()); }

// ---- log-odds domain -------------------------------------------------------

inline double log_odds(Belief b) { return std::log(b.value()) - std::log1p(-b.value()); }

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) noexcept {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// log of the logistic function, log(1/(1+exp(-x))).
inline double log_logistic(double x) noexcept { return -softplus(-x); }

/// Logistic map, computed on the side that does not overflow.
inline double logistic(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Belief with the given log-odds, kept inside (0,1) even when the logistic
/// value rounds to an endpoint.
inline Belief belief_from_log_odds(double x) {
  if (std::isnan(x)) throw std::domain_error("log-odds is NaN");
  return Belief(detail::clamp_open_unit(logistic(x)));
}

/// logistic(to) - logistic(from) without cancellation.
///
/// Uses logistic(y) - logistic(x) = expm1(y - x) * logistic(x) * logistic(-y),
/// evaluated in log space so neither factor overflows. The sign of the result
/// is the sign of (to - from) whenever the magnitude is representable.
inline double belief_gap(double from_log_odds, double to_log_odds) {
  if (std::isnan(from_log_odds) || std::isnan(to_log_odds)) throw std::domain_error("log-odds is NaN");
  const double shift = to_log_odds - from_log_odds;
  if (shift == 0.0) return 0.0;
  // log|expm1(shift)|
  const double log_scale = shift > 0.0 ? shift + std::log(-std::expm1(-shift)) : std::log(-std::expm1(shift));
  const double magnitude = std::exp(log_scale + log_logistic(from_log_odds) + log_logistic(-to_log_odds));
  return shift > 0.0 ? magnitude : -magnitude;
}

}  // namespace seqtest
