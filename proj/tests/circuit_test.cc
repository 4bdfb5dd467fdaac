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


#include "qasp/circuit.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "test_util.h"

namespace qasp {
namespace {

using ::qasp::testing::RandomSignal;
using ::qasp::testing::Tone;

TransformConfig SmallConfig(int n, int hop) {
  TransformConfig c;
  c.stft = StftConfig{n, hop};
  c.mel = MelSpec{8, 0.0, 8000.0};
  c.n_mfcc = 5;
  c.gammatone = GammatoneSpec{8, 4, 100.0, 6000.0, n};
  return c;
}

std::vector<AudioBuffer> Clips(std::mt19937& rng, int count, std::size_t length) {
  std::vector<AudioBuffer> clips;
  std::uniform_real_distribution<double> hz(100.0, 6000.0), amp(0.2, 1.0);
  for (int i = 0; i < count; ++i) {
    AudioBuffer x = i % 2 == 0 ? Tone(hz(rng), amp(rng), length)
                               : RandomSignal(rng, length);
    clips.push_back(std::move(x));
  }
  return clips;
}

// Frobenius distance between L2-normalized matrices; a zero matrix stays
// zero.
double Distance(const RealMatrix& a, const RealMatrix& b) {
  double na = 0.0, nb = 0.0;
  for (double v : a.data()) na += v * v;
  for (double v : b.data()) nb += v * v;
  na = na > 0.0 ? std::sqrt(na) : 1.0;
  nb = nb > 0.0 ? std::sqrt(nb) : 1.0;
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double u = a.data()[i] / na - b.data()[i] / nb;
    d += u * u;
  }
  return std::sqrt(d);
}

TEST(CheckBudgetTest, EmptyGraph) {
  CircuitGraph g;
  AccumulatorReport r = CheckBudget(g);
  EXPECT_TRUE(r.nodes.empty());
  EXPECT_TRUE(r.ok());
}

// One convolution with all-max weights on a [0, 1] input grid.
CircuitGraph SingleConv(int taps, int in_bits, int weight_bits) {
  CircuitGraph g;
  int in = g.AddInput(QuantParams{0.0, 1.0, in_bits, false}, taps);
  QuantParams wp{0.0, 1.0, weight_bits, false};
  IntMatrix w(1, taps, (std::int64_t{1} << weight_bits) - 1);
  g.AddConv(in, ConvMode::kTemporal, w, wp, 1, "conv");
  return g;
}

TEST(CheckBudgetTest, SingleConv) {
  AccumulatorReport r = CheckBudget(SingleConv(256, 4, 4));
  ASSERT_EQ(r.nodes.size(), 2u);
  EXPECT_EQ(r.nodes[1].worst_case_bits, 16);
  EXPECT_EQ(r.nodes[1].taps, 256);
  EXPECT_TRUE(r.ok());
  AccumulatorReport over = CheckBudget(SingleConv(292, 4, 4));
  EXPECT_EQ(over.violations, std::vector<int>{1});
}

TEST(CheckBudgetTest, AdversarialInputReachesWorstCase) {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> taps(1, 64), width(1, 5);
  for (int trial = 0; trial < 50; ++trial) {
    const int l = taps(rng), n = width(rng), m = width(rng);
    CircuitGraph g = SingleConv(l, n, m);
    AccumulatorReport r = CheckBudget(g);
    MergeObserved(r, Execute(g, std::vector<double>(l, 1.0)));
    EXPECT_EQ(r.nodes[1].worst_case_bits, AccumulatorBits(l, n, m));
    EXPECT_EQ(r.nodes[1].observed_max_bits, r.nodes[1].worst_case_bits);
  }
}

TEST(LutTest, SquareTableMatchesQuantizedSquare) {
  CircuitGraph g;
  QuantParams in_params = WithExactZero(QuantParams{-1.7, 2.3, 10, true});
  int in = g.AddInput(in_params, 4);
  QuantParams out{0.0, 5.3, 12, false};
  LutFunction square;
  square.kind = LutKind::kSquare;
  int lut = g.AddLut(in, square, out, "square");
  const LutOp& op = std::get<LutOp>(g.node(lut).op);
  ASSERT_EQ(op.table.size(), 1024u);
  for (std::int64_t q = in_params.Min(); q <= in_params.Max(); ++q) {
    const double x = Dequantize(q, in_params);
    ASSERT_EQ(op.table[q - op.table_lo], Quantize(x * x, out));
  }
}

TEST(LutTest, ExactHeadsAddOneBitOrDouble) {
  for (int bits = 2; bits <= 8; ++bits) {
    CircuitGraph g;
    QuantParams p = WithExactZero(QuantParams{-1.0, 1.0, bits, true});
    int in = g.AddInput(p, 8);
    const int in_bits = MagnitudeBits(CenteredWorst(g.node(in).out));
    int abs = g.AddExactLut(in, LutKind::kAbs, "abs");
    int sq = g.AddExactLut(in, LutKind::kSquare, "square");
    int abs_sum = g.AddGroupSum(abs, {{0, 1}}, "abs_sum");
    int sq_sum = g.AddGroupSum(sq, {{0, 1}}, "sq_sum");
    EXPECT_EQ(g.node(abs).out.bits, in_bits);
    EXPECT_EQ(g.node(abs_sum).out.bits, in_bits + 1);
    EXPECT_EQ(g.node(sq).out.bits, 2 * in_bits);
    EXPECT_EQ(g.node(sq_sum).out.bits, 2 * in_bits + 1);
  }
}

TEST(BuildPipelineTest, LowBitStftFitsTheBudget) {
  std::mt19937 rng(5);
  TransformConfig config;  // N = 1024
  std::vector<AudioBuffer> calib = Clips(rng, 2, 2048);
  PipelineSpec spec{TransformKind::kStft, Conventional{}, {2, 8, 2, 6}, config};
  CircuitGraph g = BuildPipeline(spec, calib);
  AccumulatorReport r = CheckBudget(g);
  EXPECT_TRUE(r.ok());
  const NodeBudget& conv = r.nodes[1];
  EXPECT_LE(conv.taps, 1024);
  EXPECT_EQ(conv.worst_case_bits, AccumulatorBits(conv.taps, 2, 2));
  EXPECT_LE(conv.worst_case_bits, AccumulatorBits(1024, 2, 2));
}

TEST(BuildPipelineTest, WideStftViolatesTheBudget) {
  std::mt19937 rng(6);
  std::vector<AudioBuffer> calib = Clips(rng, 2, 2048);
  PipelineSpec spec{TransformKind::kStft, Conventional{}, {8, 8, 8, 6}, {}};
  try {
    BuildPipeline(spec, calib);
    FAIL() << "expected a budget violation";
  } catch (const BudgetViolation& e) {
    ASSERT_FALSE(e.report().violations.empty());
    const NodeBudget& n = e.report().nodes[e.report().violations[0]];
    EXPECT_EQ(n.name, "conv");
    EXPECT_GT(n.worst_case_bits, 16);
    EXPECT_LE(n.worst_case_bits, 26);
  }
}

TEST(BuildPipelineTest, DilationRescuesAFailingConfig) {
  std::mt19937 rng(7);
  std::vector<AudioBuffer> calib = Clips(rng, 2, 2048);
  PipelineSpec spec{TransformKind::kStft, Conventional{}, {4, 8, 3, 6}, {}};
  EXPECT_THROW(BuildPipeline(spec, calib), BudgetViolation);
  spec.approx = Dilation{2, false};
  CircuitGraph g = BuildPipeline(spec, calib);
  EXPECT_TRUE(CheckBudget(g).ok());
}

TEST(BuildPipelineTest, TapCountsMatchNonzeroQuantizedWeights) {
  std::mt19937 rng(8);
  TransformConfig config = SmallConfig(128, 64);
  std::vector<AudioBuffer> calib = Clips(rng, 3, 1024);
  for (const char* approx : {"dilation:4", "dilation:max", "dilation:3:nocap",
                             "crop:0:1000", "conventional"}) {
    for (TransformKind kind : {TransformKind::kStft, TransformKind::kGammatone}) {
      PipelineSpec spec{kind, ParseApprox(approx), {4, 6, 3, 5}, config};
      CircuitGraph g = BuildPipeline(spec, calib);
      QuantizedWeights q =
          QuantizeWeights(BankMatrix(FrontEndBank(kind, spec.approx, config)), 3);
      const std::int64_t z = q.params.ZeroPoint();
      std::int64_t widest = 0;
      for (std::size_t r = 0; r < q.values.rows(); ++r) {
        std::int64_t count = 0;
        for (std::int64_t v : q.values.row(r)) count += v != z;
        widest = std::max(widest, count);
      }
      EXPECT_EQ(CheckBudget(g).nodes[1].taps, widest) << approx;
    }
  }
}

TEST(ExecuteTest, MatchesFloatSimulation) {
  std::mt19937 rng(9);
  TransformConfig config = SmallConfig(64, 32);
  std::vector<AudioBuffer> calib = Clips(rng, 4, 512);
  for (TransformKind kind : {TransformKind::kStft, TransformKind::kMel,
                             TransformKind::kMfcc, TransformKind::kGammatone}) {
    for (const char* approx :
         {"conventional", "dilation:4", "poorman:4", "crop:0:1000", "l1"}) {
      PipelineSpec spec{kind, ParseApprox(approx), {4, 6, 3, 5}, config};
      CircuitGraph g = BuildPipeline(spec, calib);
      for (int trial = 0; trial < 5; ++trial) {
        AudioBuffer x = RandomSignal(rng, 512);
        ExecutionResult exec = Execute(g, x.samples);
        FloatSimulation sim = SimulateFloat(g, x.samples);
        EXPECT_TRUE(CompareWithFloat(g, exec, sim).empty())
            << TransformName(kind) << ' ' << approx;
      }
    }
  }
}

TEST(ExecuteTest, ZeroInputGivesZeroOutput) {
  std::mt19937 rng(10);
  TransformConfig config = SmallConfig(64, 32);
  std::vector<AudioBuffer> calib = Clips(rng, 3, 512);
  for (TransformKind kind :
       {TransformKind::kStft, TransformKind::kMel, TransformKind::kGammatone}) {
    PipelineSpec spec{kind, Conventional{}, {4, 6, 3, 5}, config};
    CircuitGraph g = BuildPipeline(spec, calib);
    ExecutionResult r = Execute(g, std::vector<double>(512, 0.0));
    const std::int64_t z = g.node(g.output()).out.Zero();
    for (std::int64_t v : r.output().data()) EXPECT_EQ(v, z);
    const RealMatrix real = DequantizeOutput(g, r.output());
    for (double v : real.data()) EXPECT_EQ(v, 0.0);
  }
}

TEST(ExecuteTest, DilationOneEqualsConventional) {
  std::mt19937 rng(11);
  TransformConfig config = SmallConfig(64, 32);
  std::vector<AudioBuffer> calib = Clips(rng, 3, 512);
  PipelineSpec a{TransformKind::kMel, Conventional{}, {4, 6, 3, 5}, config};
  PipelineSpec b = a;
  b.approx = Dilation{1, true};
  CircuitGraph ga = BuildPipeline(a, calib), gb = BuildPipeline(b, calib);
  for (int trial = 0; trial < 5; ++trial) {
    AudioBuffer x = RandomSignal(rng, 512);
    EXPECT_EQ(Execute(ga, x.samples).output(), Execute(gb, x.samples).output());
  }
}

TEST(ExecuteTest, DeterministicAcrossRuns) {
  std::mt19937 rng(12);
  TransformConfig config = SmallConfig(64, 32);
  std::vector<AudioBuffer> calib = Clips(rng, 3, 512);
  PipelineSpec spec{TransformKind::kMfcc, Poorman{4}, {4, 6, 3, 5}, config};
  CircuitGraph g1 = BuildPipeline(spec, calib), g2 = BuildPipeline(spec, calib);
  EXPECT_EQ(CircuitToJson(g1, true), CircuitToJson(g2, true));
  AudioBuffer x = RandomSignal(rng, 512);
  EXPECT_EQ(Execute(g1, x.samples).output(), Execute(g2, x.samples).output());
}

TEST(ExecuteTest, BudgetIsSoundUnderFuzzing) {
  std::mt19937 rng(13);
  TransformConfig config = SmallConfig(32, 16);
  std::vector<AudioBuffer> calib = Clips(rng, 3, 128);
  PipelineSpec spec{TransformKind::kMel, Conventional{}, {4, 6, 3, 5}, config};
  CircuitGraph g = BuildPipeline(spec, calib);
  AccumulatorReport r = CheckBudget(g);
  std::uniform_real_distribution<double> scale(0.0, 20.0);
  std::bernoulli_distribution extreme(0.3);
  for (int trial = 0; trial < 1000; ++trial) {
    AudioBuffer x = RandomSignal(rng, 128);
    const double s = scale(rng);
    for (double& v : x.samples) v = extreme(rng) ? (v > 0 ? s : -s) : v * s;
    MergeObserved(r, Execute(g, x.samples));
  }
  for (const NodeBudget& n : r.nodes) {
    EXPECT_LE(n.observed_max_bits, n.worst_case_bits) << n.name;
  }
}

TEST(ExecuteTest, FixedLengthGraphsRejectOtherLengths) {
  CircuitGraph g;
  int in = g.AddInput(WithExactZero(QuantParams{-1.0, 1.0, 4, true}), 8);
  g.AddReduceSum(in, ReduceAxis::kTime, "sum");
  EXPECT_THROW(Execute(g, std::vector<double>(9, 0.0)), std::invalid_argument);
  EXPECT_NO_THROW(Execute(g, std::vector<double>(8, 0.0)));
}

TEST(SimulateFheTest, HighPrecisionIsClose) {
  std::mt19937 rng(14);
  TransformConfig config = SmallConfig(16, 8);
  config.mel = MelSpec{4, 0.0, 8000.0};
  config.n_mfcc = 4;
  std::vector<AudioBuffer> calib;
  for (double hz : {500.0, 1500.0, 3000.0, 5000.0}) calib.push_back(Tone(hz, 0.9, 256));
  AudioBuffer x = Tone(2000.0, 0.8, 256);
  // Widest widths the budget allows here: 16 * 63 * 63 < 2^16 in the
  // convolution and 2 * 128^2 < 2^16 after the square head.
  PipelineSpec spec{TransformKind::kStft, Conventional{}, {6, 16, 6, 8}, config};
  Spectrogram fhe = SimulateFheTransform(x, spec, calib);
  Spectrogram clear = ClearTransform(x, TransformKind::kStft, config);
  EXPECT_LT(Distance(fhe.values, clear.values), 0.05);
}

TEST(SimulateFheTest, OneBitIsWorseThanEightBits) {
  std::mt19937 rng(15);
  TransformConfig config = SmallConfig(64, 32);
  std::vector<AudioBuffer> calib = Clips(rng, 4, 512);
  AudioBuffer x = Tone(1234.0, 0.7, 512);
  Spectrogram clear = ClearTransform(x, TransformKind::kStft, config);
  PipelineSpec low{TransformKind::kStft, Conventional{}, {1, 1, 1, 1}, config};
  PipelineSpec high{TransformKind::kStft, Conventional{}, {6, 8, 4, 7}, config};
  const double d_low = Distance(SimulateFheTransform(x, low, calib).values, clear.values);
  const double d_high = Distance(SimulateFheTransform(x, high, calib).values, clear.values);
  EXPECT_GT(d_low, d_high);
}

TEST(CircuitJsonTest, Document) {
  std::mt19937 rng(16);
  std::vector<AudioBuffer> calib = Clips(rng, 2, 256);
  PipelineSpec spec{TransformKind::kStft, L1Energy{}, {4, 6, 3, 5},
                    SmallConfig(32, 16)};
  CircuitGraph g = BuildPipeline(spec, calib);
  nlohmann::json doc = nlohmann::json::parse(CircuitToJson(g, false));
  EXPECT_EQ(doc["format"], "qasp-circuit");
  EXPECT_EQ(doc["version"], 1);
  ASSERT_EQ(doc["nodes"].size(), g.nodes().size());
  EXPECT_EQ(doc["nodes"][3]["kind"], "exact_abs");
  EXPECT_EQ(doc["nodes"][1]["edge"]["bits"], g.node(1).out.bits);
}

}  // namespace
}  // namespace qasp
