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

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qasp {

namespace {

std::int64_t Levels(int bits) { return (std::int64_t{1} << bits) - 1; }

void CheckBits(int bits) {
  if (bits < 1 || bits > kMaxBits) {
    throw std::invalid_argument("bit width must be in [1, 16], got " +
                                std::to_string(bits));
  }
}

}  // namespace

double QuantParams::Scale() const {
  return (beta - alpha) / static_cast<double>(Levels(bits));
}

std::int64_t QuantParams::Offset() const {
  return is_signed ? (std::int64_t{1} << (bits - 1)) : 0;
}

std::int64_t QuantParams::Min() const { return -Offset(); }

std::int64_t QuantParams::Max() const { return Levels(bits) - Offset(); }

std::int64_t QuantParams::ZeroPoint() const { return Quantize(0.0, *this); }

void QuantParams::Validate() const {
  CheckBits(bits);
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !(alpha < beta)) {
    throw std::invalid_argument("quantization range requires alpha < beta");
  }
}

void BitWidthConfig::Validate() const {
  CheckBits(input);
  CheckBits(output);
  CheckBits(weight);
  CheckBits(intermediate);
}

std::string BitWidthConfig::ToString() const {
  std::ostringstream os;
  os << input << ',' << output << ',' << weight << ',' << intermediate;
  return os.str();
}

BitWidthConfig BitWidthConfig::Parse(const std::string& text) {
  std::vector<int> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad bit width '" + item + "' in '" + text +
                                  "'");
    }
  }
  if (values.size() != 4) {
    throw std::invalid_argument("expected Bi,Bo,Bw,Bm, got '" + text + "'");
  }
  BitWidthConfig config{values[0], values[1], values[2], values[3]};
  config.Validate();
  return config;
}

double RoundHalfAway(double x) { return std::round(x); }

QuantParams Calibrate(std::span<const double> data, int bits, bool is_signed) {
  CheckBits(bits);
  if (data.empty()) {
    throw std::invalid_argument("calibration data is empty");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : data) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("calibration data contains non-finite values");
    }
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi) hi = lo + 1.0;
  return QuantParams{lo, hi, bits, is_signed};
}

QuantParams Calibrate(const std::vector<std::vector<double>>& data, int bits,
                      bool is_signed) {
  std::vector<double> flat;
  for (const auto& part : data) flat.insert(flat.end(), part.begin(), part.end());
  return Calibrate(flat, bits, is_signed);
}

QuantParams WithExactZero(const QuantParams& params) {
  params.Validate();
  const double lo = std::min(params.alpha, 0.0);
  const double hi = std::max(params.beta, 0.0);
  const std::int64_t levels = Levels(params.bits);
  const double step = (hi - lo) / static_cast<double>(levels);
  const std::int64_t zero = std::clamp<std::int64_t>(
      static_cast<std::int64_t>(RoundHalfAway(-lo / step)), 0, levels);
  QuantParams out = params;
  out.alpha = -static_cast<double>(zero) * step;
  out.beta = out.alpha + step * static_cast<double>(levels);
  return out;
}

std::int64_t Quantize(double x, const QuantParams& params) {
  const std::int64_t levels = Levels(params.bits);
  double clamped = x;
  if (!(clamped >= params.alpha)) clamped = params.alpha;  // also maps NaN
  if (clamped > params.beta) clamped = params.beta;
  const double scaled = (clamped - params.alpha) *
                        static_cast<double>(levels) /
                        (params.beta - params.alpha);
  const std::int64_t q = std::clamp<std::int64_t>(
      static_cast<std::int64_t>(RoundHalfAway(scaled)), 0, levels);
  return q - params.Offset();
}

double Dequantize(std::int64_t q, const QuantParams& params) {
  if (q < params.Min() || q > params.Max()) {
    throw std::invalid_argument("quantized value " + std::to_string(q) +
                                " outside representable range");
  }
  return params.alpha +
         static_cast<double>(q + params.Offset()) * params.Scale();
}

QuantizedTensor QuantizeTensor(std::span<const double> x,
                               const QuantParams& params) {
  QuantizedTensor out;
  out.params = params;
  out.data.reserve(x.size());
  for (double v : x) out.data.push_back(Quantize(v, params));
  return out;
}

std::vector<double> DequantizeTensor(const QuantizedTensor& q) {
  std::vector<double> out;
  out.reserve(q.data.size());
  for (std::int64_t v : q.data) out.push_back(Dequantize(v, q.params));
  return out;
}

QuantizedTensor Requantize(const QuantizedTensor& q, int new_bits) {
  CheckBits(new_bits);
  QuantParams target = q.params;
  target.bits = new_bits;
  QuantizedTensor out;
  out.params = target;
  out.data.reserve(q.data.size());
  for (std::int64_t v : q.data) {
    out.data.push_back(Quantize(Dequantize(v, q.params), target));
  }
  return out;
}

int MagnitudeBits(std::uint64_t v) {
  int bits = 0;
  while (bits < 64 && (std::uint64_t{1} << bits) < v) ++bits;
  return bits;
}

int UnsignedBitLength(std::uint64_t v) {
  int bits = 0;
  while (v != 0) {
    ++bits;
    v >>= 1;
  }
  return bits;
}

int AccumulatorBits(std::int64_t taps, int in_bits, int weight_bits) {
  if (taps < 1 || in_bits < 1 || weight_bits < 1) {
    throw std::invalid_argument("AccumulatorBits arguments must be >= 1");
  }
  if (in_bits > 31 || weight_bits > 31) {
    throw std::invalid_argument("AccumulatorBits operand width too large");
  }
  const unsigned __int128 product =
      static_cast<unsigned __int128>(taps) *
      static_cast<unsigned __int128>(Levels(in_bits)) *
      static_cast<unsigned __int128>(Levels(weight_bits));
  int bits = 0;
  while ((static_cast<unsigned __int128>(1) << bits) < product) ++bits;
  return bits;
}

}  // namespace qasp
