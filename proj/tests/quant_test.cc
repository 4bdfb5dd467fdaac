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


#include "qasp/quant.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace qasp {
namespace {

TEST(CalibrateTest, MinMax) {
  std::vector<double> data{0.0, 0.5, 1.0};
  QuantParams p = Calibrate(data, 8, false);
  EXPECT_EQ(p.alpha, 0.0);
  EXPECT_EQ(p.beta, 1.0);
}

TEST(CalibrateTest, DegenerateRangeIsWidened) {
  std::vector<double> data{2.0};
  QuantParams p = Calibrate(data, 8, false);
  EXPECT_EQ(p.alpha, 2.0);
  EXPECT_EQ(p.beta, 3.0);
}

TEST(CalibrateTest, SignedRange) {
  std::vector<double> data{-3.0, 1.0, 5.0};
  QuantParams p = Calibrate(data, 8, true);
  EXPECT_EQ(p.Min(), -128);
  EXPECT_EQ(p.Max(), 127);
  EXPECT_EQ(Quantize(-3.0, p), -128);
  EXPECT_EQ(Quantize(5.0, p), 127);
}

TEST(CalibrateTest, RejectsEmptyAndNan) {
  std::vector<double> empty;
  EXPECT_THROW(Calibrate(empty, 8, false), std::invalid_argument);
  std::vector<double> bad{1.0, std::nan("")};
  EXPECT_THROW(Calibrate(bad, 8, false), std::invalid_argument);
  std::vector<double> ok{1.0};
  EXPECT_THROW(Calibrate(ok, 17, false), std::invalid_argument);
}

TEST(QuantizeTest, Examples) {
  QuantParams p{0.0, 1.0, 8, false};
  EXPECT_EQ(Quantize(0.0, p), 0);
  EXPECT_EQ(Quantize(1.0, p), 255);
  EXPECT_EQ(Quantize(0.4, p), 102);
  EXPECT_EQ(Quantize(-7.0, p), 0);
  EXPECT_EQ(Quantize(7.0, p), 255);
  EXPECT_NEAR(Dequantize(102, p), 0.4, 1.0 / 510.0);
  EXPECT_EQ(Dequantize(0, p), 0.0);
  EXPECT_THROW(Dequantize(256, p), std::invalid_argument);
  EXPECT_THROW(Dequantize(-1, p), std::invalid_argument);
}

TEST(QuantizeTest, HalvesRoundAwayFromZero) {
  // (x - alpha) * 3 / 3 = 1.5 exactly.
  QuantParams p{0.0, 3.0, 2, false};
  EXPECT_EQ(Quantize(1.5, p), 2);
  EXPECT_EQ(Quantize(0.5, p), 1);
}

TEST(QuantizeTest, RoundTripAndMonotone) {
  std::mt19937 rng(7);
  for (int bits = 1; bits <= kMaxBits; ++bits) {
    for (bool is_signed : {false, true}) {
      QuantParams p{-1.3, 2.1, bits, is_signed};
      std::uniform_real_distribution<double> dist(-2.0, 3.0);
      std::vector<double> xs(2000);
      for (double& x : xs) x = dist(rng);
      std::sort(xs.begin(), xs.end());
      const double half_step = (p.beta - p.alpha) / (2.0 * ((1 << bits) - 1));
      std::int64_t prev = p.Min();
      for (double x : xs) {
        const std::int64_t q = Quantize(x, p);
        ASSERT_GE(q, prev);
        prev = q;
        const double clamped = std::clamp(x, p.alpha, p.beta);
        ASSERT_LE(std::abs(Dequantize(q, p) - clamped), half_step + 1e-12);
      }
    }
  }
}

TEST(QuantizeTest, SignedIsUnsignedMinusOffset) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int bits = 1; bits <= kMaxBits; ++bits) {
    QuantParams u{-0.7, 0.9, bits, false};
    QuantParams s = u;
    s.is_signed = true;
    for (int i = 0; i < 200; ++i) {
      const double x = dist(rng);
      ASSERT_EQ(Quantize(x, u) - Quantize(x, s), std::int64_t{1} << (bits - 1));
    }
  }
}

TEST(RequantizeTest, SameWidthIsIdentity) {
  QuantParams p{0.0, 1.0, 6, true};
  QuantizedTensor q;
  q.params = p;
  for (std::int64_t v = p.Min(); v <= p.Max(); ++v) q.data.push_back(v);
  EXPECT_EQ(Requantize(q, 6).data, q.data);
}

TEST(RequantizeTest, EightToOneThresholds) {
  QuantParams p{0.0, 1.0, 8, false};
  QuantizedTensor q;
  q.params = p;
  for (std::int64_t v = 0; v <= 255; ++v) q.data.push_back(v);
  QuantizedTensor r = Requantize(q, 1);
  for (std::int64_t v = 0; v <= 255; ++v) {
    const double x = v / 255.0;
    if (x < 0.25) EXPECT_EQ(r.data[v], 0);
    if (x > 0.75) EXPECT_EQ(r.data[v], 1);
  }
}

TEST(RequantizeTest, FourEightFourRoundTrip) {
  QuantParams p{-2.0, 5.0, 4, false};
  QuantizedTensor q;
  q.params = p;
  for (std::int64_t v = 0; v <= 15; ++v) q.data.push_back(v);
  EXPECT_EQ(Requantize(Requantize(q, 8), 4).data, q.data);
}

TEST(WithExactZeroTest, ZeroIsRepresented) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  for (int i = 0; i < 500; ++i) {
    double a = dist(rng), b = dist(rng);
    if (a == b) continue;
    for (int bits : {1, 2, 5, 12}) {
      for (bool is_signed : {false, true}) {
        QuantParams p = WithExactZero(
            QuantParams{std::min(a, b), std::max(a, b), bits, is_signed});
        EXPECT_LE(p.alpha, 0.0);
        EXPECT_GE(p.beta, 0.0);
        EXPECT_NEAR(Dequantize(p.ZeroPoint(), p), 0.0, 1e-12 * p.Scale());
      }
    }
  }
}

TEST(BitWidthConfigTest, ParseAndFormat) {
  BitWidthConfig c = BitWidthConfig::Parse("4,6,3,5");
  EXPECT_EQ(c.input, 4);
  EXPECT_EQ(c.output, 6);
  EXPECT_EQ(c.weight, 3);
  EXPECT_EQ(c.intermediate, 5);
  EXPECT_EQ(c.ToString(), "4,6,3,5");
  EXPECT_THROW(BitWidthConfig::Parse("4,6,3"), std::invalid_argument);
  EXPECT_THROW(BitWidthConfig::Parse("4,6,3,17"), std::invalid_argument);
  EXPECT_THROW(BitWidthConfig::Parse("4,x,3,5"), std::invalid_argument);
}

// ceil(log2(v)) by repeated doubling in long double.
int Log2Ceil(long double v) {
  int bits = 0;
  long double p = 1.0L;
  while (p < v) {
    p *= 2.0L;
    ++bits;
  }
  return bits;
}

TEST(AccumulatorBitsTest, Examples) {
  EXPECT_EQ(AccumulatorBits(1, 1, 1), 0);
  EXPECT_EQ(AccumulatorBits(400, 8, 8), 25);
  EXPECT_EQ(AccumulatorBits(256, 4, 4), 16);
  EXPECT_EQ(AccumulatorBits(1024, 2, 2), 14);
  EXPECT_EQ(AccumulatorBits(1024, 8, 8), 26);
  EXPECT_THROW(AccumulatorBits(0, 1, 1), std::invalid_argument);
}

TEST(AccumulatorBitsTest, MatchesLogOracleAndIsMonotone) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> taps(1, 5000), width(1, 16);
  for (int i = 0; i < 2000; ++i) {
    const int l = taps(rng), n = width(rng), m = width(rng);
    const long double product = static_cast<long double>(l) *
                                ((1 << n) - 1) * ((1 << m) - 1);
    const int bits = AccumulatorBits(l, n, m);
    ASSERT_EQ(bits, Log2Ceil(product)) << l << ' ' << n << ' ' << m;
    ASSERT_LE(bits, AccumulatorBits(l + 1, n, m));
    if (n < 16) ASSERT_LE(bits, AccumulatorBits(l, n + 1, m));
    if (m < 16) ASSERT_LE(bits, AccumulatorBits(l, n, m + 1));
  }
}

TEST(BitCountTest, MagnitudeAndUnsigned) {
  EXPECT_EQ(MagnitudeBits(0), 0);
  EXPECT_EQ(MagnitudeBits(1), 0);
  EXPECT_EQ(MagnitudeBits(2), 1);
  EXPECT_EQ(MagnitudeBits(3), 2);
  EXPECT_EQ(MagnitudeBits(65536), 16);
  EXPECT_EQ(MagnitudeBits(65537), 17);
  EXPECT_EQ(UnsignedBitLength(0), 0);
  EXPECT_EQ(UnsignedBitLength(255), 8);
  EXPECT_EQ(UnsignedBitLength(256), 9);
}

}  // namespace
}  // namespace qasp
