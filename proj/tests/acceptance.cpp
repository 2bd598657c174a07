// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "seqtest/cli.hpp"
#include "seqtest/error_lab.hpp"
#include "seqtest/io.hpp"
#include "seqtest/redundancy.hpp"
#include "seqtest/sim_continuous.hpp"
#include "seqtest/sim_discrete.hpp"

using namespace seqtest;

namespace {

constexpr std::uint64_t kSeed = 0x5eed2026;

struct Result {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::vector<PathRecord> ensemble(MeasurePair truth, MeasurePair test, double p0, double pi0, OutcomeMode mode,
                                 std::size_t horizon, std::size_t paths, std::uint64_t seed, unsigned threads = 1) {
  return simulate_paths(
      ScenarioSpec{std::move(truth), std::move(test), Belief(p0), Belief(pi0), mode, horizon, paths, seed}, threads);
}

const GaussianIID kHalf{0.5, -0.5, 1.0};
const GaussianIID kTruth{1.0, 0.0, 1.0};
const GaussianIID kMisspecified{1.2, -0.1, 1.0};

// 1
Result bias_identity() {
  const auto recs = ensemble(kHalf, kHalf, 0.2, 0.1, DrawnFromPrior{}, 400, 100, kSeed);
  const double rho = rho_of(Belief(0.2), Belief(0.1));
  double residual = 0.0;
  double agreement = 0.0;
  bool positive = true;
  for (const auto& r : recs) {
    for (std::size_t k = 0; k < r.size(); ++k) {
      const Belief pi(r.pi[k]);
      const double closed = bias_term(pi, rho);
      residual = std::max(residual, std::abs((r.p_check[k] - r.pi[k]) - closed));
      residual = std::max(residual, std::abs(r.bias[k] - closed));
      agreement = std::max(agreement, std::abs(bias_term_product_form(Belief(r.p_check[k]), pi, rho) - closed));
      positive = positive && r.bias[k] > 0.0;
    }
  }
  return {std::abs(rho - 2.25) < 1e-14 && residual < 1e-10 && agreement < 1e-10 && positive,
          "max residual " + fmt("%.2e", residual) + ", closed forms differ by " + fmt("%.2e", agreement) +
              (positive ? ", bias > 0 everywhere" : ", NONPOSITIVE bias found")};
}

// 2
Result decomposition_identity() {
  std::size_t checked = 0;
  bool exact = true;
  bool matched_zero = true;
  bool equal_priors_zero = true;
  auto check = [&](const std::vector<PathRecord>& recs, bool expect_no_diffusive, bool expect_no_bias) {
    for (const auto& r : recs) {
      const auto d = decompose(r);
      for (std::size_t k = 0; k < r.size(); ++k) {
        exact = exact && r.err[k] == r.bias[k] + r.diffusive[k] && d.total[k] == d.bias[k] + d.diffusive[k];
        if (expect_no_diffusive) matched_zero = matched_zero && r.diffusive[k] == 0.0 && d.diffusive[k] == 0.0;
        if (expect_no_bias) equal_priors_zero = equal_priors_zero && r.bias[k] == 0.0 && d.bias[k] == 0.0;
        ++checked;
      }
    }
  };
  check(ensemble(kHalf, kHalf, 0.2, 0.1, DrawnFromPrior{}, 400, 50, kSeed + 1), true, false);
  check(ensemble(kTruth, kMisspecified, 0.2, 0.1, DrawnFromPrior{}, 400, 50, kSeed + 2), false, false);
  check(ensemble(kTruth, kMisspecified, 0.35, 0.35, DrawnFromPrior{}, 400, 50, kSeed + 3), false, true);
  check(ensemble(BernoulliIID{0.6, 0.3}, BernoulliIID{0.7, 0.2}, 0.4, 0.4, DrawnFromPrior{}, 400, 50, kSeed + 4), false,
        true);
  std::vector<PathRecord> filt;
  for (std::size_t i = 0; i < 50; ++i) {
    filt.push_back(filter_path_record({0.5, 0.4, 1.0, 1.0}, {0.01, 400}, Outcome::b, Belief(0.6), Belief(0.3), kSeed, i));
  }
  check(filt, false, false);
  return {exact && matched_zero && equal_priors_zero,
          std::to_string(checked) + " time points: total == bias + diffusive " + (exact ? "exactly" : "VIOLATED") +
              ", truth = test diffusive " + (matched_zero ? "== 0" : "NONZERO") + ", equal priors bias " +
              (equal_priors_zero ? "== 0" : "NONZERO")};
}

// 3
Result resolution() {
  const auto recs = ensemble(kHalf, kHalf, 0.5, 0.5, FixedOutcome{Outcome::b}, 400, 1000, kSeed + 5);
  std::size_t correct = 0;
  for (const auto& r : recs) correct += classify_outcome(r, std::log(99.0)) == Decision::DecidedB;
  const double rate = static_cast<double>(correct) / static_cast<double>(recs.size());
  return {rate >= 0.99, "correct-sign rate " + fmt("%.4f", rate) + " at threshold log 99"};
}

// 4
Result kakutani() {
  bool ok = true;
  for (const MeasurePair& same : {MeasurePair{GaussianIID{0.3, 0.3, 1.0}}, MeasurePair{BernoulliIID{0.4, 0.4}}}) {
    ok = ok && classify_pair(same).kind == TestKind::NonResolving;
    for (const auto& r : ensemble(same, same, 0.5, 0.5, DrawnFromPrior{}, 500, 20, kSeed + 6)) {
      for (double l : r.test_loglr) ok = ok && l == 0.0;
    }
  }
  double worst = 0.0;
  for (auto [mb, mbb, sd] : {std::tuple{1.0, 0.0, 1.0}, {0.5, -0.5, 1.0}, {2.0, -2.0, 1.0}, {0.05, -0.05, 1.0},
                             {3.0, 1.0, 2.5}}) {
    const auto c = classify_pair(GaussianIID{mb, mbb, sd});
    ok = ok && c.kind == TestKind::Regular;
    const double oracle = oracle::gaussian_affinity_by_quadrature(mb, mbb, sd);
    const double formula = std::exp(-(mb - mbb) * (mb - mbb) / (8.0 * sd * sd));
    worst = std::max({worst, std::abs(c.hellinger_affinity_per_step - oracle),
                      std::abs(c.hellinger_affinity_per_step - formula)});
  }
  ok = ok && worst < 1e-12;
  return {ok, "identical marginals NonResolving with l == 0; distinct Regular, affinity error " + fmt("%.2e", worst)};
}

// 5
Result lemma_verdicts() {
  const auto shared = ensemble(kHalf, kHalf, 0.2, 0.1, FixedOutcome{Outcome::b}, 500, 100, kSeed + 7);
  const auto a = redundancy_verdict(agent_ensemble(shared), would_be_ensemble(shared));
  const bool pass_a = a.verdict.redundant && std::abs(a.verdict.c - 2.25) <= 0.01 && std::abs(a.gamma - 1.0) <= 0.02;

  const auto base = ensemble(kTruth, kTruth, 0.5, 0.5, FixedOutcome{Outcome::b}, 500, 100, kSeed + 8);
  const auto b = redundancy_verdict(agent_ensemble(base), reevaluated_ensemble(base, GaussianIID{1.5, -0.5, 1.0},
                                                                               Belief(0.5)));
  const bool pass_b = !b.verdict.redundant && b.adjacency_trend == AdjacencyTrend::Growing;

  const auto mis = ensemble(kTruth, kMisspecified, 0.5, 0.5, FixedOutcome{Outcome::b}, 500, 100, kSeed + 9);
  const auto c = redundancy_verdict(agent_ensemble(mis), truth_ensemble(mis));
  const bool pass_c = !c.verdict.redundant && c.verdict.failed(FailedCondition::Homogeneity);

  return {pass_a && pass_b && pass_c,
          "(a) " + std::string(a.verdict.redundant ? "RedundantLinear" : "NotRedundant") + " c=" +
              fmt("%.6f", a.verdict.c) + " gamma=" + fmt("%.6f", a.gamma) + "; (b) " +
              (b.verdict.redundant ? "RedundantLinear" : "NotRedundant") + " trend=" + to_string(b.adjacency_trend) +
              " gamma=" + fmt("%.4f", b.gamma) + "; (c) " + (c.verdict.redundant ? "RedundantLinear" : "NotRedundant") +
              " [" + c.verdict.reason() + "] homogeneity=" + fmt("%.3f", c.homogeneity_stat)};
}

// 6
Result ito_ode() {
  double worst = 0.0;
  for (double gp : {0.25, 0.5, 0.75, 1.0}) {
    for (Outcome br : {Outcome::b, Outcome::bbar}) worst = std::max(worst, ito_ode_check(gp, br, 5.0).max_deviation);
  }
  double identity = 0.0;
  for (Outcome br : {Outcome::b, Outcome::bbar}) {
    identity = std::max(identity, std::abs(ito_ode_check(1.0, br, 5.0).numeric_end - 5.0));
    for (double x = 0.0; x <= 5.0; x += 0.25) identity = std::max(identity, std::abs(ito_closed_form(1.0, br, x) - x));
  }
  return {worst < 1e-6 && identity < 1e-6,
          "sup deviation " + fmt("%.2e", worst) + ", unit-slope departure from identity " + fmt("%.2e", identity)};
}

// 7
Result sde_moments() {
  const SdeSpec spec{{1.0}, IdentityClock{}, {1e-3, 1000}, Outcome::b, kSeed};
  const std::size_t idx[] = {1000};
  const auto rows = sample_loglr(spec, 100000, idx);
  std::vector<double> l1;
  l1.reserve(rows.size());
  for (const auto& r : rows) l1.push_back(r[0]);
  const auto m = oracle::mean_and_se(l1);
  const auto v = oracle::variance_and_se(l1);
  const bool ok = std::abs(m.mean - 0.5) < 3.0 * m.se && std::abs(v.mean - 1.0) < 3.0 * v.se;
  return {ok, "mean " + fmt("%.5f", m.mean) + " (SE " + fmt("%.5f", m.se) + "), variance " + fmt("%.5f", v.mean) +
                  " (SE " + fmt("%.5f", v.se) + ")"};
}

// 8
Result filter_gap() {
  const FilterSpec f{0.5, 0.4, 1.0, 1.0};
  const TimeGrid grid{0.01, 100};
  std::vector<double> gaps(100000);
  parallel_for(gaps.size(), 1, [&](std::size_t i) {
    const auto fp = misspecified_filter(f, grid, Outcome::b, kSeed, i);
    gaps[i] = fp.true_loglr.back() - fp.agent_loglr.back();
  });
  const auto m = oracle::mean_and_se(gaps);
  const double expected = expected_filter_gap(f, 1.0);
  const bool gap_ok = std::abs(expected - 0.1) < 1e-15 && std::abs(m.mean - expected) < 3.0 * m.se;

  const std::vector<double> st(grid.steps + 1, f.true_signal_to_noise());
  const std::vector<double> sa(grid.steps + 1, f.agent_signal_to_noise());
  const double drift = drift_integral(st, sa, grid.dt, 1.0);
  int matches = 0;
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    const std::uint64_t seed = mix64(kSeed ^ (0x9e3779b97f4a7c15ULL * (rep + 1)));
    double mean = 0.0;
    const std::size_t n = 10000;
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = filter_path_record(f, grid, Outcome::b, Belief(0.5), Belief(0.5), seed, i);
      mean += r.diffusive.back() / static_cast<double>(n);
    }
    matches += sign_of(mean) == sign_of(drift);
  }
  return {gap_ok && matches >= 19,
          "mean gap " + fmt("%.5f", m.mean) + " (SE " + fmt("%.5f", m.se) + ", expected 0.1); diffusive sign matches " +
              "drift integral " + fmt("%.2f", drift) + " in " + std::to_string(matches) + "/20 replications"};
}

// 9
Result witnesses() {
  const auto mis = ensemble(kTruth, kMisspecified, 0.5, 0.5, FixedOutcome{Outcome::b}, 500, 100, kSeed + 10);
  const auto w = path_dependency_witness(mis, 1e-3, 0.02);
  const auto matched = ensemble(kTruth, kTruth, 0.5, 0.5, FixedOutcome{Outcome::b}, 500, 100, kSeed + 10);
  const auto w0 = path_dependency_witness(matched, 1e-3, 0.02);
  return {!w.empty() && w0.empty(), "misspecified: " + std::to_string(w.total) + " witnessing pairs; matched: " +
                                        std::to_string(w0.total)};
}

// 10
Result small_increments() {
  const GaussianIID g{0.05, -0.05, 1.0};
  const auto recs = ensemble(g, g, 0.5, 0.5, FixedOutcome{Outcome::b}, 100000, 10, kSeed + 11);
  const auto rep = small_increment_diagnostic(recs, 1000);
  return {rep.ratio >= 0.9 && rep.ratio <= 1.1, "ratio " + fmt("%.4f", rep.ratio) + " over 10 paths x 10^5 steps, " +
                                                    std::to_string(rep.windows.size()) + " windows of 1000"};
}

// 11
std::string digest(const std::vector<PathRecord>& recs) {
  std::string all;
  for (const auto& r : recs) {
    std::ostringstream os;
    io::write_trajectory_csv(os, r);
    all += cli::sha256_hex(os.str());
  }
  return cli::sha256_hex(all);
}

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result determinism() {
  bool ok = true;
  std::size_t compared = 0;
  std::vector<std::string> reference;
  for (unsigned threads : {1u, 2u, 3u, 8u}) {
    std::vector<std::string> d;
    d.push_back(digest(ensemble(kHalf, kHalf, 0.2, 0.1, DrawnFromPrior{}, 400, 100, kSeed, threads)));
    d.push_back(digest(ensemble(kTruth, kMisspecified, 0.5, 0.5, FixedOutcome{Outcome::b}, 500, 100, kSeed + 10, threads)));
    std::vector<PathRecord> filt(200);
    parallel_for(filt.size(), threads, [&](std::size_t i) {
      filt[i] = filter_path_record({0.5, 0.4, 1.0, 1.0}, {0.01, 100}, Outcome::b, Belief(0.5), Belief(0.5), kSeed, i);
    });
    d.push_back(digest(filt));
    std::vector<PathRecord> sde(50);
    const SdeSpec spec{{1.0}, CompactifyClock{1.0}, {1e-3, 999}, Outcome::b, kSeed};
    parallel_for(sde.size(), threads,
                 [&](std::size_t i) { sde[i] = sde_path_record(spec, Belief(0.5), Belief(0.5), i); });
    d.push_back(digest(sde));
    if (reference.empty()) {
      reference = d;
    } else {
      ok = ok && d == reference;
    }
    compared += d.size();
  }

  // through the command line workflow
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / ("seqtest_acceptance_" + std::to_string(kSeed));
  fs::remove_all(root);
  std::ostringstream sink;
  std::vector<std::string> listings;
  for (unsigned threads : {1u, 4u}) {
    for (int rep = 0; rep < 2; ++rep) {
      cli::Overrides ov;
      ov.output_dir = root / ("t" + std::to_string(threads) + "_" + std::to_string(rep));
      ov.threads = threads;
      ov.seed = kSeed;
      ov.formats = std::set<std::string>{"csv"};
      if (cli::run(fs::path(SEQTEST_SOURCE_DIR) / "configs" / "simulate_matched.yaml", ov, sink) != cli::kOk) ok = false;
      std::string listing;
      for (const auto& e : fs::directory_iterator(*ov.output_dir / "trajectories")) {
        listing += e.path().filename().string() + ":" + cli::sha256_hex(read_all(e.path())) + "\n";
      }
      listings.push_back(listing);
    }
  }
  std::sort(listings.begin(), listings.end());
  ok = ok && !listings.front().empty() && listings.front() == listings.back();
  fs::remove_all(root);
  return {ok, std::to_string(compared) + " ensemble digests at 1/2/3/8 threads and 4 command line runs " +
                  (ok ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Result()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "bias identity", 5, bias_identity},
      {2, "decomposition identity", 5, decomposition_identity},
      {3, "resolution", 10, resolution},
      {4, "Kakutani classification", 1, kakutani},
      {5, "redundancy verdicts", 30, lemma_verdicts},
      {6, "Ito ODE", 1, ito_ode},
      {7, "SDE moments", 60, sde_moments},
      {8, "misspecified filter", 60, filter_gap},
      {9, "path-dependency witness", 15, witnesses},
      {10, "small-increment relation", 5, small_increments},
      {11, "determinism", 120, determinism},
  };
  std::printf("acceptance suite, master seed %#llx\n", static_cast<unsigned long long>(kSeed));
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Result o{false, ""};
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs < c.budget_seconds;
    const bool pass = o.pass && in_budget;
    failures += !pass;
    std::printf("%s  [%2d] %-26s %s (%.2f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                in_budget ? "" : ", OVER BUDGET");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
