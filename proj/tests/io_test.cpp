#include "seqtest/io.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace seqtest;

namespace {

PathRecord small_record(double time_step = 0.0) {
  PathRecord r;
  r.path_index = 3;
  r.time_step = time_step;
  r.true_prior = 0.2;
  r.agent_prior = 0.1;
  r.data = {1.5, -0.25};
  r.true_loglr = {0.0, 1.0, 0.25};
  r.test_loglr = {0.0, 1.0, 0.25};
  fill_beliefs_and_errors(r);
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Format, ShortestRoundTrip) {
  EXPECT_EQ(io::format_number(0.1), "0.1");
  EXPECT_EQ(io::format_number(2.25), "2.25");
  EXPECT_EQ(io::format_number(0.0), "0");
  EXPECT_EQ(io::format_number(-1e-300), "-1e-300");
  EXPECT_EQ(io::format_number(std::nan("")), "nan");
  EXPECT_EQ(io::format_number(-INFINITY), "-inf");
  for (double x : {1.0 / 3.0, 0.2 + 0.1, 123456.789e10}) EXPECT_EQ(std::stod(io::format_number(x)), x);
}

TEST(Trajectory, Headers) {
  EXPECT_EQ(io::trajectory_header(false), "step,datum,true_loglr,test_loglr,p,p_check,pi,err,bias,diffusive");
  EXPECT_EQ(io::trajectory_header(true), "time,datum,true_loglr,test_loglr,p,p_check,pi,err,bias,diffusive");
}

TEST(Trajectory, DiscreteRows) {
  std::ostringstream os;
  io::write_trajectory_csv(os, small_record());
  const auto ls = lines(os.str());
  ASSERT_EQ(ls.size(), 4u);
  EXPECT_EQ(ls[1].substr(0, 11), "0,,0,0,0.2,");
  EXPECT_EQ(ls[2].substr(0, 12), "1,1.5,1,1,0.");
  EXPECT_EQ(ls[3].substr(0, 13), "2,-0.25,0.25,");
  for (std::size_t i = 1; i < ls.size(); ++i) EXPECT_EQ(std::count(ls[i].begin(), ls[i].end(), ','), 9);
}

TEST(Trajectory, ContinuousTimeColumn) {
  std::ostringstream os;
  io::write_trajectory_csv(os, small_record(0.5));
  const auto ls = lines(os.str());
  EXPECT_EQ(ls[0].substr(0, 5), "time,");
  EXPECT_EQ(ls[3].substr(0, 2), "1,");
  EXPECT_EQ(ls[2].substr(0, 4), "0.5,");
}

TEST(Trajectory, Deterministic) {
  std::ostringstream a, b;
  io::write_trajectory_csv(a, small_record());
  io::write_trajectory_csv(b, small_record());
  EXPECT_EQ(a.str(), b.str());
}

TEST(Jsonl, OneObjectPerPath) {
  std::vector<PathRecord> recs{small_record(), small_record()};
  recs[1].path_index = 4;
  std::ostringstream os;
  io::write_jsonl(os, recs);
  const auto ls = lines(os.str());
  ASSERT_EQ(ls.size(), 2u);
  const auto j = io::json::parse(ls[1]);
  EXPECT_EQ(j["path"], 4);
  EXPECT_EQ(j["steps"], 2);
  EXPECT_EQ(j["outcome"], "b");
  EXPECT_EQ(j["final_diffusive"], 0.0);
  EXPECT_FALSE(j.contains("time_step"));
}

TEST(Json, TestClass) {
  const auto j = io::to_json(classify_pair(GaussianIID{1, 0, 1}));
  EXPECT_EQ(j["kind"], "Regular");
  EXPECT_NEAR(j["hellinger_affinity_per_step"].get<double>(), std::exp(-0.125), 1e-15);
}

TEST(Json, WitnessSet) {
  WitnessSet w{1e-3, 0.02, 5, {{0, 1, 2, 3, 1e-4, 0.05}}};
  const auto j = io::to_json(w);
  EXPECT_EQ(j["total"], 5);
  EXPECT_EQ(j["truncated"], true);
  EXPECT_EQ(j["entries"].size(), 1u);
  EXPECT_EQ(j["entries"][0]["time_2"], 3);
}

TEST(Csv, DecompositionAndAsset) {
  const auto r = small_record();
  const auto d = decompose(r);
  std::ostringstream os;
  io::write_decomposition_csv(os, d);
  auto ls = lines(os.str());
  ASSERT_EQ(ls.size(), 4u);
  EXPECT_EQ(ls[0], "step,bias,diffusive,total");
  EXPECT_EQ(ls[1], "0," + io::format_number(d.bias[0]) + ",0," + io::format_number(d.total[0]));

  std::ostringstream as;
  io::write_asset_csv(as, asset_scenario(r, 1.0, 0.0, 1.0), 0.25);
  ls = lines(as.str());
  EXPECT_EQ(ls[0], "time,x,y,z");
  EXPECT_EQ(ls[2].substr(0, 5), "0.25,");
}
