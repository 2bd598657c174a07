#pragma once

// Decomposition of the inferential error p - pi into a prior-driven bias
// p_check - pi and a data-driven diffusive part p - p_check, plus the
// asset-pricing reading of the same gap.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "seqtest/belief.hpp"
#include "seqtest/path_record.hpp"
#include "seqtest/sim_continuous.hpp"

namespace seqtest {

/// Ratio of true prior odds to agent prior odds.
inline double rho_of(Belief p0, Belief pi0) { return odds_of(p0).value() / odds_of(pi0).value(); }

namespace detail {
inline void check_rho(double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw std::domain_error("rho must be positive and finite");
}
}  // namespace detail

/// p_check - pi for O[p_check] = rho O[pi], in terms of pi alone:
/// (rho^1/2 - rho^-1/2) sigma(pi)^2 / (rho^1/2 pi + rho^-1/2 (1 - pi)).
inline double bias_term(Belief pi, double rho) {
  detail::check_rho(rho);
  const double r = std::sqrt(rho);
  const double s = sigma(pi);
  return (r - 1.0 / r) * s * s / (r * pi.value() + pi.complement() / r);
}

/// Same quantity as the product (rho^1/2 - rho^-1/2) sigma(p_check) sigma(pi).
inline double bias_term_product_form(Belief p_check, Belief pi, double rho) {
  detail::check_rho(rho);
  const double r = std::sqrt(rho);
  return (r - 1.0 / r) * sigma(p_check) * sigma(pi);
}

/// |p_check - pi| can never exceed this, since sigma <= 1/2.
inline double bias_bound(double rho) {
  detail::check_rho(rho);
  return std::abs(std::sqrt(rho) - 1.0 / std::sqrt(rho)) * 0.25;
}

struct ErrorDecomposition {
  std::size_t path_index;
  double rho;
  std::vector<double> bias;
  std::vector<double> diffusive;
  std::vector<double> total;
  int bias_sign;
  /// max_n |bias_n - bias_term(pi_n, rho)|
  double closed_form_residual;
  /// max_n |product form - pi-only form| of the bias closed forms
  double closed_form_agreement;
};

inline int sign_of(double x) noexcept { return (x > 0.0) - (x < 0.0); }

/// Recomputes the three components from the record's log-LRs and priors and
/// checks the bias against its closed forms at every step.
inline ErrorDecomposition decompose(const PathRecord& r) {
  const Belief p0(r.true_prior);
  const Belief pi0(r.agent_prior);
  const double true_prior_lo = log_odds(p0);
  const double agent_prior_lo = log_odds(pi0);
  ErrorDecomposition d;
  d.path_index = r.path_index;
  d.rho = rho_of(p0, pi0);
  d.bias_sign = sign_of(d.rho - 1.0);
  const std::size_t n = r.size();
  d.bias.resize(n);
  d.diffusive.resize(n);
  d.total.resize(n);
  d.closed_form_residual = 0.0;
  d.closed_form_agreement = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto e = error_components(agent_prior_lo + r.test_loglr[k], true_prior_lo + r.test_loglr[k],
                                    true_prior_lo + r.true_loglr[k]);
    d.bias[k] = e.bias;
    d.diffusive[k] = e.diffusive;
    d.total[k] = e.total;
    const Belief pi(r.pi[k]);
    const double closed = bias_term(pi, d.rho);
    d.closed_form_residual = std::max(d.closed_form_residual, std::abs(e.bias - closed));
    d.closed_form_agreement =
        std::max(d.closed_form_agreement, std::abs(bias_term_product_form(Belief(r.p_check[k]), pi, d.rho) - closed));
  }
  return d;
}

/// Node values of two signal-to-noise schedules, used to put the drift
/// integral next to the empirical diffusive error.
struct DriftReference {
  std::span<const double> true_sigma;
  std::span<const double> agent_sigma;
  double dt;
};

struct SignStatistic {
  std::size_t index;  // grid index / step
  double time;
  double positive_fraction;   // share of paths with diffusive > 0; exact zeros count 1/2
  double mean_diffusive;
  double mean_bias;
  double mitigation_fraction;  // share with bias and diffusive of strictly opposite signs
  std::optional<double> drift_integral;
};

/// Sign and mean of the diffusive error across paths at the requested indices.
inline std::vector<SignStatistic> sign_statistics(std::span<const ErrorDecomposition> ensemble,
                                                  std::span<const std::size_t> indices, double time_step = 0.0,
                                                  std::optional<DriftReference> drift = std::nullopt) {
  if (ensemble.empty()) throw std::invalid_argument("empty ensemble");
  std::vector<SignStatistic> out;
  const auto paths = static_cast<double>(ensemble.size());
  for (auto k : indices) {
    double positive = 0.0;
    double mean_d = 0.0;
    double mean_b = 0.0;
    double mitigating = 0.0;
    for (const auto& d : ensemble) {
      if (k >= d.diffusive.size()) throw std::out_of_range("index beyond path length");
      const double x = d.diffusive[k];
      positive += x > 0.0 ? 1.0 : (x == 0.0 ? 0.5 : 0.0);
      mean_d += x;
      mean_b += d.bias[k];
      if (sign_of(d.bias[k]) * sign_of(x) < 0) mitigating += 1.0;
    }
    const double t = time_step > 0.0 ? static_cast<double>(k) * time_step : static_cast<double>(k);
    SignStatistic s{k, t, positive / paths, mean_d / paths, mean_b / paths, mitigating / paths, std::nullopt};
    if (drift) s.drift_integral = drift_integral(drift->true_sigma, drift->agent_sigma, drift->dt, t);
    out.push_back(s);
  }
  return out;
}

// ---- asset scenario -----------------------------------------------------------

struct AssetScenario {
  std::size_t path_index;
  double payoff_b;
  double payoff_bbar;
  double discount;
  std::vector<double> x;  // price: discount * v(pi)
  std::vector<double> y;  // realised worth: v(p)
  std::vector<double> z;  // realised premium: y - x
};

/// v(q) = q payoff_b + (1 - q) payoff_bbar with constant payoffs.
///
/// Z is evaluated as discount (payoff_b - payoff_bbar) Err + (1 - discount) Y,
/// which equals Y - X and inherits Err's accuracy.
inline AssetScenario asset_scenario(const PathRecord& r, double payoff_b, double payoff_bbar, double discount) {
  if (!std::isfinite(payoff_b) || !std::isfinite(payoff_bbar)) throw std::domain_error("payoffs must be finite");
  if (!(discount > 0.0) || discount > 1.0) throw std::domain_error("discount must lie in (0, 1]");
  auto v = [&](double q) { return q * payoff_b + (1.0 - q) * payoff_bbar; };
  AssetScenario s{r.path_index, payoff_b, payoff_bbar, discount, {}, {}, {}};
  const std::size_t n = r.size();
  s.x.resize(n);
  s.y.resize(n);
  s.z.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    s.y[k] = v(r.p[k]);
    s.x[k] = discount * v(r.pi[k]);
    s.z[k] = discount * (payoff_b - payoff_bbar) * r.err[k] + (1.0 - discount) * s.y[k];
  }
  return s;
}

}  // namespace seqtest
