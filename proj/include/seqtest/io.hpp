#pragma once

// CSV / JSONL / JSON serialization of trajectories and reports.
//
// Numbers are written in shortest round-trip form, so files are byte-stable
// for a given input.

#include <charconv>
#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>

#include <json.hpp>

#include "seqtest/error_lab.hpp"
#include "seqtest/measures.hpp"
#include "seqtest/path_record.hpp"
#include "seqtest/redundancy.hpp"
#include "seqtest/sim_discrete.hpp"

namespace seqtest::io {

using nlohmann::json;

inline constexpr std::string_view kTrajectoryColumns =
    "datum,true_loglr,test_loglr,p,p_check,pi,err,bias,diffusive";

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  if (res.ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf, res.ptr);
}

/// Header line of a trajectory CSV: `step` for discrete, `time` for continuous runs.
inline std::string trajectory_header(bool continuous) {
  return std::string(continuous ? "time," : "step,") + std::string(kTrajectoryColumns);
}

/// One row per grid point; the datum column of row 0 is empty.
inline void write_trajectory_csv(std::ostream& os, const PathRecord& r) {
  os << trajectory_header(r.continuous()) << '\n';
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (r.continuous()) {
      os << format_number(static_cast<double>(k) * r.time_step);
    } else {
      os << k;
    }
    os << ',' << (k == 0 ? std::string() : format_number(r.data[k - 1]));
    for (const auto* col : {&r.true_loglr, &r.test_loglr, &r.p, &r.p_check, &r.pi, &r.err, &r.bias, &r.diffusive}) {
      os << ',' << format_number((*col)[k]);
    }
    os << '\n';
  }
}

inline json path_summary(const PathRecord& r) {
  const std::size_t last = r.size() - 1;
  json j = {{"path", r.path_index},
            {"outcome", to_string(r.outcome)},
            {"steps", last},
            {"true_prior", r.true_prior},
            {"agent_prior", r.agent_prior},
            {"final_true_loglr", r.true_loglr[last]},
            {"final_test_loglr", r.test_loglr[last]},
            {"final_p", r.p[last]},
            {"final_p_check", r.p_check[last]},
            {"final_pi", r.pi[last]},
            {"final_err", r.err[last]},
            {"final_bias", r.bias[last]},
            {"final_diffusive", r.diffusive[last]}};
  if (r.continuous()) j["time_step"] = r.time_step;
  return j;
}

/// One JSON object per line, ordered by path index.
inline void write_jsonl(std::ostream& os, std::span<const PathRecord> records) {
  for (const auto& r : records) os << path_summary(r).dump() << '\n';
}

inline json to_json(const TestClass& c) {
  return {{"kind", to_string(c.kind)},
          {"hellinger_affinity_per_step", c.hellinger_affinity_per_step},
          {"horizon_affinity", c.horizon_affinity},
          {"classification", c.horizon_limited ? "horizon-limited classification" : "exact (i.i.d.)"}};
}

inline json to_json(const SmallIncrementReport& r) {
  json windows = json::array();
  for (const auto& w : r.windows) {
    windows.push_back({{"first_step", w.first_step},
                       {"mean_increment", w.mean_increment},
                       {"half_second_moment", w.half_second_moment},
                       {"ratio", w.ratio}});
  }
  return {{"outcome", to_string(r.outcome)}, {"window", r.window},
          {"mean_increment", r.mean_increment}, {"half_second_moment", r.half_second_moment},
          {"ratio", r.ratio}, {"half_variance", r.half_variance},
          {"centered_ratio", r.centered_ratio}, {"windows", windows}};
}

inline json to_json(const RedundancyReport& r) {
  json fits = json::array();
  for (const auto& f : r.state_map_fits) {
    fits.push_back({{"step", f.step}, {"samples", f.samples}, {"residual", f.state_map_residual}});
  }
  json verdict = r.verdict.redundant ? json{{"kind", "RedundantLinear"}, {"c", r.verdict.c}}
                                     : json{{"kind", "NotRedundant"}, {"reason", r.verdict.reason()}};
  return {{"adjacency_sup", r.adjacency_sup},
          {"adjacency_first_quarter_sup", r.adjacency_first_quarter},
          {"adjacency_last_quarter_sup", r.adjacency_last_quarter},
          {"adjacency_trend_ratio", r.trend_ratio},
          {"adjacency_trend", to_string(r.adjacency_trend)},
          {"adjacency_note", "trend proxy: last-quarter sup over first-quarter sup"},
          {"homogeneity_stat", r.homogeneity_stat},
          {"homogeneity_pairs", r.homogeneity_pairs},
          {"gamma", r.gamma},
          {"c", r.c},
          {"fit_residual", r.fit_residual},
          {"state_map_fits", fits},
          {"verdict", verdict}};
}

/// step, samples, state_map_residual, gamma, c, power_residual
inline void write_power_law_series_csv(std::ostream& os, const RedundancyReport& r) {
  os << "step,samples,state_map_residual,gamma,c,power_residual\n";
  for (const auto& f : r.state_map_fits) {
    os << f.step << ',' << f.samples << ',' << format_number(f.state_map_residual) << ',' << format_number(f.gamma)
       << ',' << format_number(f.c) << ',' << format_number(f.power_residual) << '\n';
  }
}

inline json to_json(const WitnessSet& w) {
  json entries = json::array();
  for (const auto& e : w.entries) {
    entries.push_back({{"path_1", e.path_1}, {"time_1", e.time_1}, {"path_2", e.path_2}, {"time_2", e.time_2},
                       {"pi_gap", e.pi_gap}, {"p_gap", e.p_gap}});
  }
  return {{"epsilon", w.epsilon}, {"delta", w.delta}, {"total", w.total}, {"truncated", w.truncated()},
          {"entries", entries}};
}

inline json to_json(const ErrorDecomposition& d) {
  const std::size_t last = d.total.size() - 1;
  return {{"path", d.path_index},
          {"rho", d.rho},
          {"bias_sign", d.bias_sign},
          {"closed_form_residual", d.closed_form_residual},
          {"closed_form_agreement", d.closed_form_agreement},
          {"final_bias", d.bias[last]},
          {"final_diffusive", d.diffusive[last]},
          {"final_total", d.total[last]}};
}

inline json to_json(const SignStatistic& s) {
  json j = {{"index", s.index}, {"time", s.time}, {"positive_fraction", s.positive_fraction},
            {"mean_diffusive", s.mean_diffusive}, {"mean_bias", s.mean_bias},
            {"mitigation_fraction", s.mitigation_fraction}};
  j["drift_integral"] = s.drift_integral ? json(*s.drift_integral) : json(nullptr);
  return j;
}

/// step (or time), bias, diffusive, total
inline void write_decomposition_csv(std::ostream& os, const ErrorDecomposition& d, double time_step = 0.0) {
  os << (time_step > 0.0 ? "time" : "step") << ",bias,diffusive,total\n";
  for (std::size_t k = 0; k < d.total.size(); ++k) {
    if (time_step > 0.0) {
      os << format_number(static_cast<double>(k) * time_step);
    } else {
      os << k;
    }
    os << ',' << format_number(d.bias[k]) << ',' << format_number(d.diffusive[k]) << ',' << format_number(d.total[k])
       << '\n';
  }
}

/// step (or time), x, y, z
inline void write_asset_csv(std::ostream& os, const AssetScenario& s, double time_step = 0.0) {
  os << (time_step > 0.0 ? "time" : "step") << ",x,y,z\n";
  for (std::size_t k = 0; k < s.z.size(); ++k) {
    if (time_step > 0.0) {
      os << format_number(static_cast<double>(k) * time_step);
    } else {
      os << k;
    }
    os << ',' << format_number(s.x[k]) << ',' << format_number(s.y[k]) << ',' << format_number(s.z[k]) << '\n';
  }
}

}  // namespace seqtest::io
