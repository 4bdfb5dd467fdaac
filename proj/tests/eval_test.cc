// Copyright 2026 The QASP Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "qasp/eval.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "json.hpp"
#include "test_util.h"

namespace qasp {
namespace {

using ::qasp::testing::VaryingTones;

// Two-sided exact p by listing every way to pick which pooled ranks belong
// to the first sample.
double EnumeratedExactP(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  const int n = pooled.size(), n1 = a.size();
  double rank_a = 0.0;
  for (double v : a) {
    rank_a += std::find(pooled.begin(), pooled.end(), v) - pooled.begin() + 1;
  }
  const double u = rank_a - n1 * (n1 + 1) / 2.0;
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + n1, true);
  double total = 0, lower = 0, upper = 0;
  do {
    double r = 0.0;
    for (int i = 0; i < n; ++i) if (pick[i]) r += i + 1;
    const double ui = r - n1 * (n1 + 1) / 2.0;
    total += 1;
    lower += ui <= u;
    upper += ui >= u;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return std::min(1.0, 2.0 * std::min(lower, upper) / total);
}

// Normal approximation from the pairwise definition of U.
double PairwiseNormalP(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0.0;
  for (double x : a)
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  std::map<double, int> counts;
  for (double v : a) ++counts[v];
  for (double v : b) ++counts[v];
  double ties = 0.0;
  for (const auto& [v, t] : counts) ties += double(t) * t * t - t;
  const double n1 = a.size(), n2 = b.size(), n = n1 + n2;
  const double sigma = std::sqrt(n1 * n2 / 12.0 * (n + 1 - ties / (n * (n - 1))));
  if (sigma == 0.0) return 1.0;
  const double z = std::max(0.0, std::abs(u - n1 * n2 / 2) - 0.5) / sigma;
  return std::min(1.0, 2.0 * (1.0 - 0.5 * std::erfc(-z / std::sqrt(2.0))));
}

std::vector<double> Draw(std::mt19937& rng, int n, double shift) {
  std::normal_distribution<double> g(shift, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

TEST(NormalizedEuclideanTest, IdenticalAndScaled) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RealMatrix a(5, 7);
  for (double& v : a.data()) v = u(rng);
  RealMatrix b = a;
  for (double& v : b.data()) v *= 3.0;
  EXPECT_NEAR(NormalizedEuclidean(a, a), 0.0, 1e-12);
  EXPECT_NEAR(NormalizedEuclidean(a, b), 0.0, 1e-12);
}

TEST(NormalizedEuclideanTest, OrthogonalIsSqrtTwo) {
  RealMatrix a(2, 2), b(2, 2);
  a(0, 0) = 4.0;
  b(1, 1) = 0.5;
  EXPECT_NEAR(NormalizedEuclidean(a, b), std::sqrt(2.0), 1e-12);
}

TEST(NormalizedEuclideanTest, ZeroOperands) {
  RealMatrix z(3, 3), a(3, 3);
  a(1, 2) = 2.0;
  EXPECT_EQ(NormalizedEuclidean(z, z), 0.0);
  EXPECT_EQ(NormalizedEuclidean(z, a), 1.0);
  EXPECT_EQ(NormalizedEuclidean(a, z), 1.0);
}

TEST(NormalizedEuclideanTest, BoundedAndShapeChecked) {
  std::mt19937 rng(2);
  std::normal_distribution<double> g;
  for (int t = 0; t < 200; ++t) {
    RealMatrix a(4, 6), b(4, 6);
    for (double& v : a.data()) v = g(rng);
    for (double& v : b.data()) v = g(rng);
    const double d = NormalizedEuclidean(a, b);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 2.0 + 1e-12);
  }
  EXPECT_THROW(NormalizedEuclidean(RealMatrix(2, 3), RealMatrix(3, 2)),
               std::invalid_argument);
}

TEST(MannWhitneyTest, SeparatedTriplesGivePointOne) {
  const std::vector<double> a{1, 2, 3}, b{10, 11, 12};
  EXPECT_DOUBLE_EQ(MannWhitneyU(a, b), 0.1);
  EXPECT_DOUBLE_EQ(EnumeratedExactP(a, b), 0.1);
}

TEST(MannWhitneyTest, IdenticalSamplesGiveOne) {
  const std::vector<double> a{1, 2, 2, 3, 5};
  EXPECT_DOUBLE_EQ(MannWhitneyU(a, a), 1.0);
  const std::vector<double> c(12, 4.0);
  EXPECT_DOUBLE_EQ(MannWhitneyU(c, c), 1.0);
}

TEST(MannWhitneyTest, ExactMatchesEnumeration) {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> size(1, 8);
  for (int t = 0; t < 60; ++t) {
    const std::vector<double> a = Draw(rng, size(rng), 0.0);
    const std::vector<double> b = Draw(rng, size(rng), 0.7);
    EXPECT_NEAR(MannWhitneyExact(a, b), EnumeratedExactP(a, b), 1e-12);
    EXPECT_NEAR(MannWhitneyU(a, b), EnumeratedExactP(a, b), 1e-12);
  }
}

TEST(MannWhitneyTest, NormalMatchesPairwiseFormula) {
  std::mt19937 rng(4);
  std::uniform_int_distribution<int> level(0, 6);
  for (int t = 0; t < 60; ++t) {
    std::vector<double> a(15), b(22);
    for (double& v : a) v = level(rng);
    for (double& v : b) v = level(rng) + 1;
    EXPECT_NEAR(MannWhitneyNormal(a, b), PairwiseNormalP(a, b), 1e-12);
    EXPECT_NEAR(MannWhitneyU(a, b), PairwiseNormalP(a, b), 1e-12);
  }
}

TEST(MannWhitneyTest, ExactAndNormalAgreeAtTen) {
  std::mt19937 rng(5);
  for (int t = 0; t < 100; ++t) {
    const std::vector<double> a = Draw(rng, 10, 0.0);
    const std::vector<double> b = Draw(rng, 10, 0.5);
    EXPECT_NEAR(MannWhitneyExact(a, b), MannWhitneyNormal(a, b), 0.02);
  }
}

TEST(MannWhitneyTest, SymmetricAndRankInvariant) {
  std::mt19937 rng(6);
  for (int t = 0; t < 100; ++t) {
    const int n = 3 + t % 20;
    std::vector<double> a = Draw(rng, n, 0.0), b = Draw(rng, 25 - n, 0.3);
    EXPECT_NEAR(MannWhitneyU(a, b), MannWhitneyU(b, a), 1e-12);
    if (a.size() + b.size() <= 20) {
      std::vector<double> ea = a, eb = b;
      for (double& v : ea) v = std::exp(3.0 * v) + 7.0;
      for (double& v : eb) v = std::exp(3.0 * v) + 7.0;
      EXPECT_DOUBLE_EQ(MannWhitneyU(a, b), MannWhitneyU(ea, eb));
    }
  }
}

TEST(MannWhitneyTest, ExactRejectsTies) {
  EXPECT_THROW(MannWhitneyExact(std::vector<double>{1, 2},
                                std::vector<double>{2, 3}),
               std::invalid_argument);
  EXPECT_THROW(MannWhitneyU(std::vector<double>{}, std::vector<double>{1}),
               std::invalid_argument);
}

TEST(PearsonTest, LinearRelations) {
  const std::vector<double> a{1, 4, 2, 8, 5};
  std::vector<double> b, c;
  for (double v : a) {
    b.push_back(2 * v + 3);
    c.push_back(-v);
  }
  EXPECT_NEAR(Pearson(a, b), 1.0, 1e-15);
  EXPECT_NEAR(Pearson(a, c), -1.0, 1e-15);
}

TEST(PearsonTest, MatchesCovarianceFormula) {
  std::mt19937 rng(7);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a = Draw(rng, 30, 0.0), b = Draw(rng, 30, 1.0);
    for (std::size_t i = 0; i < a.size(); ++i) b[i] += 0.5 * a[i];
    const double n = a.size();
    double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      sa += a[i];
      sb += b[i];
      sab += a[i] * b[i];
      saa += a[i] * a[i];
      sbb += b[i] * b[i];
    }
    const double cov = sab / n - sa * sb / (n * n);
    const double r = cov / std::sqrt((saa / n - sa * sa / (n * n)) *
                                     (sbb / n - sb * sb / (n * n)));
    EXPECT_NEAR(Pearson(a, b), r, 1e-12);
  }
}

TEST(PearsonTest, ConstantIsUndefined) {
  EXPECT_THROW(Pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
               UndefinedCorrelation);
  EXPECT_THROW(Pearson(std::vector<double>{1}, std::vector<double>{2}),
               std::invalid_argument);
}

TEST(DiscoveryTest, Outcomes) {
  EXPECT_EQ(Classify(0.01, 0.01), Outcome::kTP);
  EXPECT_EQ(Classify(0.01, 0.20), Outcome::kFN);
  EXPECT_EQ(Classify(0.20, 0.01), Outcome::kFP);
  EXPECT_EQ(Classify(0.20, 0.20), Outcome::kTN);
  EXPECT_EQ(Classify(0.05, 0.049), Outcome::kFP);
}

TEST(DiscoveryTest, CountsPartition) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> p(0.0, 0.1);
  std::vector<PairTestResult> rs(97);
  int flips = 0;
  for (PairTestResult& r : rs) {
    r.p_clear = p(rng);
    r.p_fhe = p(rng);
    r.outcome = Classify(r.p_clear, r.p_fhe);
    flips += (r.p_clear < 0.05) != (r.p_fhe < 0.05);
  }
  const DiscoveryErrorReport rep = DiscoveryErrors(rs);
  EXPECT_EQ(rep.tp + rep.fp + rep.tn + rep.fn, 97);
  EXPECT_EQ(rep.n, 97);
  EXPECT_EQ(rep.fp + rep.fn, flips);
  EXPECT_DOUBLE_EQ(rep.error_rate, flips / 97.0);
}

TEST(DiscoveryTest, TableCell) {
  DiscoveryErrorReport rep;
  rep.tp = 5;
  rep.fn = 2;
  rep.fp = 1;
  rep.n = 8;
  rep.error_rate = 3.0 / 8.0;
  EXPECT_EQ(rep.TableCell(), "37.50% (3)");
}

TEST(PairTestsTest, IdenticalArmsHaveNoErrors) {
  std::mt19937 rng(9);
  std::normal_distribution<double> g;
  std::vector<std::string> labels;
  std::vector<DescriptorValues> rows;
  for (int i = 0; i < 36; ++i) {
    labels.push_back(std::string(1, static_cast<char>('a' + i % 3)));
    DescriptorValues v;
    for (double& d : v) d = g(rng) + (i % 3 == 0 ? 2.0 : 0.0);
    rows.push_back(v);
  }
  const std::vector<PairTestResult> rs = RunPairTests(labels, rows, rows);
  ASSERT_EQ(rs.size(), 4u * 3u);
  EXPECT_EQ(rs[0].class_pair, std::make_pair(std::string("a"), std::string("b")));
  EXPECT_EQ(rs[0].descriptor, "m_gstds");
  const DiscoveryErrorReport rep = DiscoveryErrors(rs);
  EXPECT_EQ(rep.error_rate, 0.0);
  EXPECT_GT(rep.tp, 0);
  for (const PairTestResult& r : rs) EXPECT_EQ(r.p_clear, r.p_fhe);
}

TEST(PairTestsTest, CsvFormats) {
  PairTestResult r;
  r.descriptor = "std_rms";
  r.class_pair = {"x", "y"};
  r.p_clear = 0.001;
  r.p_fhe = 0.5;
  r.outcome = Outcome::kFN;
  const std::vector<PairTestResult> rs{r};
  EXPECT_EQ(PairTestsCsv(rs),
            "descriptor,class_a,class_b,p_clear,p_fhe,outcome\n"
            "std_rms,x,y,0.001,0.5,FN\n");
  EXPECT_EQ(PValueScatterCsv(rs),
            "descriptor,class_a,class_b,log10_p_clear,log10_p_fhe\n"
            "std_rms,x,y,-3,-0.301029996\n");
}

TransformConfig SmallConfig() {
  TransformConfig c;
  c.stft = StftConfig{64, 32};
  c.mel = MelSpec{8, 0.0, 8000.0};
  c.n_mfcc = 5;
  c.gammatone = GammatoneSpec{8, 4, 100.0, 6000.0, 64};
  return c;
}

TEST(GridSearchTest, DefaultGridSize) {
  const std::vector<BitWidthConfig> g = DefaultGrid();
  EXPECT_EQ(g.size(), 2401u);
  EXPECT_EQ(g.front().input, 2);
  EXPECT_EQ(g.back().intermediate, 8);
}

TEST(GridSearchTest, HighPrecisionConfigTracksClearPath) {
  std::mt19937 rng(10);
  const std::vector<AudioBuffer> clips = VaryingTones(rng, 50, 2048);
  GridSearchRequest q;
  q.space = {{6, 10, 4, 7}};
  q.config = SmallConfig();
  const std::vector<GridSearchResult> rs = GridSearch(q, clips, clips);
  ASSERT_EQ(rs.size(), 1u);
  ASSERT_TRUE(rs[0].feasible) << rs[0].reason;
  EXPECT_GT(rs[0].mean_r, 0.99);
}

TEST(GridSearchTest, InfeasibleSkippedAndRankingDeterministic) {
  std::mt19937 rng(11);
  const std::vector<AudioBuffer> calib = VaryingTones(rng, 6, 1024);
  const std::vector<AudioBuffer> eval = VaryingTones(rng, 8, 1200);
  GridSearchRequest q;
  q.space = {{8, 8, 8, 8}, {3, 5, 3, 4}, {4, 6, 3, 5}, {2, 4, 2, 3}, {6, 6, 6, 8}};
  q.config = SmallConfig();
  q.threads = 3;
  const std::vector<GridSearchResult> a = GridSearch(q, calib, eval);
  q.threads = 1;
  const std::vector<GridSearchResult> b = GridSearch(q, calib, eval);
  ASSERT_EQ(a.size(), 5u);
  EXPECT_EQ(GridSearchJson(a, q.objective), GridSearchJson(b, q.objective));
  EXPECT_FALSE(a[4].feasible);
  EXPECT_FALSE(a[3].feasible);
  EXPECT_EQ(a[4].config.input, 8);
  for (const auto& r : a[4].r) EXPECT_FALSE(r.has_value());
  for (int i = 0; i + 1 < 3; ++i) {
    ASSERT_TRUE(a[i].feasible);
    EXPECT_GE(a[i].mean_r, a[i + 1].mean_r);
  }
  const auto j = nlohmann::json::parse(GridSearchJson(a, q.objective));
  EXPECT_EQ(j["feasible"], 3);
  EXPECT_EQ(j["ranking"][0]["rank"], 1);
}

TEST(GridSearchTest, TiesBreakLexicographically) {
  std::mt19937 rng(12);
  // Silence gives a constant output everywhere, so every r is undefined and
  // every feasible mean is 0.
  const std::vector<AudioBuffer> calib = VaryingTones(rng, 4, 1024);
  std::vector<AudioBuffer> eval(5, AudioBuffer{std::vector<double>(1024, 0.0), 16000});
  GridSearchRequest q;
  q.space = {{4, 6, 3, 5}, {3, 6, 3, 5}, {3, 5, 3, 5}};
  q.config = SmallConfig();
  const std::vector<GridSearchResult> rs = GridSearch(q, calib, eval);
  ASSERT_EQ(rs.size(), 3u);
  for (const auto& r : rs) {
    ASSERT_TRUE(r.feasible);
    EXPECT_EQ(r.mean_r, 0.0);
  }
  EXPECT_EQ(rs[0].config.input, 3);
  EXPECT_EQ(rs[0].config.output, 5);
  EXPECT_EQ(rs[1].config.output, 6);
  EXPECT_EQ(rs[2].config.input, 4);
}

TEST(GridSearchTest, DistanceObjectiveRanksAscending) {
  std::mt19937 rng(13);
  const std::vector<AudioBuffer> calib = VaryingTones(rng, 6, 1024);
  const std::vector<AudioBuffer> eval = VaryingTones(rng, 6, 1024);
  GridSearchRequest q;
  q.objective = Objective::kIntrinsicDistance;
  q.transform = TransformKind::kStft;
  q.space = {{2, 2, 2, 2}, {6, 8, 4, 8}, {4, 6, 3, 5}};
  q.config = SmallConfig();
  const std::vector<GridSearchResult> rs = GridSearch(q, calib, eval);
  ASSERT_TRUE(rs[2].feasible);
  EXPECT_LE(rs[0].mean_distance, rs[1].mean_distance);
  EXPECT_LE(rs[1].mean_distance, rs[2].mean_distance);
  EXPECT_EQ(rs[0].config.input, 6);
  EXPECT_EQ(rs[2].config.input, 2);
}

TEST(GridSearchTest, WeightShare) {
  std::vector<GridSearchResult> rs(3);
  rs[0].feasible = rs[1].feasible = true;
  rs[0].config = {4, 4, 4, 4};
  rs[1].config = {8, 6, 2, 4};
  EXPECT_DOUBLE_EQ(WeightBitShare(rs, 10), (0.25 + 0.1) / 2);
  EXPECT_DOUBLE_EQ(WeightBitShare(rs, 1), 0.25);
}

}  // namespace
}  // namespace qasp
