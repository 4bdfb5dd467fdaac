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

// Range-based affine uniform quantization.
//
// A value x in the calibrated range [alpha, beta] maps to
//   q = round((x - alpha) * (2^B - 1) / (beta - alpha))
// with rounding half away from zero; the signed variant subtracts 2^(B-1).
// Values outside the range clamp to the range ends.

#ifndef QASP_QUANT_H_
#define QASP_QUANT_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qasp {

inline constexpr int kMaxBits = 16;

struct QuantParams {
  double alpha = 0.0;
  double beta = 1.0;
  int bits = 8;
  bool is_signed = false;

  // Real step between adjacent integers.
  double Scale() const;
  // Smallest and largest representable integer.
  std::int64_t Min() const;
  std::int64_t Max() const;
  // 2^(B-1) when signed, else 0.
  std::int64_t Offset() const;
  // Integer that represents real 0 (only exact after WithExactZero).
  std::int64_t ZeroPoint() const;

  void Validate() const;
  friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

struct QuantizedTensor {
  std::vector<std::int64_t> data;
  QuantParams params;
};

// Bit widths of the four quantizer families in a pipeline: input, output,
// convolution weights, intermediate activations.
struct BitWidthConfig {
  int input = 4;
  int output = 8;
  int weight = 3;
  int intermediate = 6;

  void Validate() const;
  int Total() const { return input + output + weight + intermediate; }
  std::string ToString() const;  // "Bi,Bo,Bw,Bm"
  static BitWidthConfig Parse(const std::string& text);
  friend auto operator<=>(const BitWidthConfig&,
                          const BitWidthConfig&) = default;
};

// Rounds half away from zero.
double RoundHalfAway(double x);

// Global min/max of the calibration data. A degenerate range alpha == beta
// is widened to [alpha, alpha + 1]. Throws std::invalid_argument on empty
// or non-finite data.
QuantParams Calibrate(std::span<const double> data, int bits, bool is_signed);
QuantParams Calibrate(const std::vector<std::vector<double>>& data, int bits,
                      bool is_signed);

// Extends the range to contain 0 and shifts it by less than one step so that
// real 0 is represented exactly by an integer. The step is unchanged.
QuantParams WithExactZero(const QuantParams& params);

std::int64_t Quantize(double x, const QuantParams& params);
// Throws std::invalid_argument if q is outside [Min(), Max()].
double Dequantize(std::int64_t q, const QuantParams& params);

QuantizedTensor QuantizeTensor(std::span<const double> x,
                               const QuantParams& params);
std::vector<double> DequantizeTensor(const QuantizedTensor& q);

// Dequantize with the current width, quantize again with new_bits on the same
// [alpha, beta] range.
QuantizedTensor Requantize(const QuantizedTensor& q, int new_bits);

// Worst-case accumulator width of a dot product of `taps` terms with inputs
// on in_bits and weights on weight_bits:
//   ceil(log2(taps * (2^in_bits - 1) * (2^weight_bits - 1)))
// computed exactly in integers.
int AccumulatorBits(std::int64_t taps, int in_bits, int weight_bits);

// ceil(log2(v)) for v >= 1 and 0 for v <= 1; the width convention used by
// AccumulatorBits, applied to a magnitude.
int MagnitudeBits(std::uint64_t v);

// Number of bits B so that v fits in [0, 2^B - 1].
int UnsignedBitLength(std::uint64_t v);

}  // namespace qasp

#endif  // QASP_QUANT_H_
