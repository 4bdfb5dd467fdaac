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


#include "qasp/descriptors.h"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace qasp {

const std::array<std::string, kNumDescriptors>& DescriptorNames() {
  static const std::array<std::string, kNumDescriptors> names = {
      "m_gstds", "m_mstds", "mean_rms", "std_rms"};
  return names;
}

std::vector<double> RmsPerFrame(const Spectrogram& power) {
  if (power.NumFrames() < 1 || power.NumChannels() < 1) {
    throw std::invalid_argument("RMS needs a non-empty spectrogram");
  }
  std::vector<double> rms(power.NumFrames());
  for (int m = 0; m < power.NumFrames(); ++m) {
    rms[m] = std::sqrt(Mean(power.values.row(m)));
  }
  return rms;
}

double Mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean of an empty sequence");
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double PopulationStd(std::span<const double> v) {
  const double mu = Mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

double MeanStdOverTime(const Spectrogram& spec) {
  if (spec.NumFrames() < 2) {
    throw std::invalid_argument("std over time needs at least two frames");
  }
  std::vector<double> column(spec.NumFrames());
  double acc = 0.0;
  for (int c = 0; c < spec.NumChannels(); ++c) {
    for (int m = 0; m < spec.NumFrames(); ++m) column[m] = spec.values(m, c);
    acc += PopulationStd(column);
  }
  return acc / spec.NumChannels();
}

DescriptorValues RawDescriptors(const AudioBuffer& x,
                                const TransformConfig& config) {
  const Spectrogram power = ClearTransform(x, TransformKind::kStft, config);
  const Spectrogram mel = ClearTransform(x, TransformKind::kMel, config);
  const Spectrogram gt = ClearTransform(x, TransformKind::kGammatone, config);
  const std::vector<double> rms = RmsPerFrame(power);
  return {MeanStdOverTime(gt), MeanStdOverTime(mel), Mean(rms),
          PopulationStd(rms)};
}

void NormalizationConstants::Validate() const {
  for (int i = 0; i < kNumDescriptors; ++i) {
    if (!std::isfinite(center[i]) || !(scale[i] > 0.0)) {
      throw std::invalid_argument("normalization scale must be > 0");
    }
  }
}

DescriptorValues NormalizationConstants::Apply(
    const DescriptorValues& raw) const {
  DescriptorValues out;
  for (int i = 0; i < kNumDescriptors; ++i) {
    out[i] = (raw[i] - center[i]) / scale[i];
  }
  return out;
}

NormalizationConstants FitNormalization(
    std::span<const DescriptorValues> raw) {
  if (raw.empty()) throw std::invalid_argument("no calibration descriptors");
  NormalizationConstants norms;
  std::vector<double> column(raw.size());
  for (int i = 0; i < kNumDescriptors; ++i) {
    for (std::size_t j = 0; j < raw.size(); ++j) column[j] = raw[j][i];
    norms.center[i] = Mean(column);
    const double sd = PopulationStd(column);
    norms.scale[i] = sd > 0.0 ? sd : 1.0;
  }
  return norms;
}

DescriptorValues ClearDescriptorVector(const AudioBuffer& x,
                                       const TransformConfig& config,
                                       const NormalizationConstants& norms) {
  return norms.Apply(RawDescriptors(x, config));
}

namespace {

// Widest unsigned output width whose sum over `count` terms fits the budget.
int SumWidth(std::size_t count) {
  int bits = kMaxBits;
  while (bits > 1 &&
         MagnitudeBits(static_cast<std::uint64_t>(count) *
                       ((std::uint64_t{1} << bits) - 1)) > kMaxBits) {
    --bits;
  }
  return bits;
}

// std over time per channel, then mean over channels; returns the channel
// sum and leaves the 1/C to the final LUT.
int StdAcrossChannels(CircuitBuilder& b, int spec, const std::string& prefix) {
  const EdgeSpec edge = b.graph().node(spec).out;
  const double frames = static_cast<double>(edge.frames);
  const int bits = SumWidth(edge.channels);
  const int ss = b.SquaredDeviationSum(spec, SumWidth(edge.frames), prefix);
  LutFunction sqrt_fn;
  sqrt_fn.kind = LutKind::kSqrt;
  sqrt_fn.pre_scale = 1.0 / frames;
  const int sd = b.Lut(ss, sqrt_fn, bits, false, prefix + ".std");
  return b.ReduceSum(sd, ReduceAxis::kChannels, prefix + ".std_sum");
}

}  // namespace

DescriptorCircuit BuildDescriptorCircuit(
    const ApproxSpec& approx, const BitWidthConfig& bits,
    const TransformConfig& config, std::span<const AudioBuffer> calibration) {
  bits.Validate();
  config.Validate();
  const std::vector<std::vector<double>> rows = CalibrationRows(calibration);

  DescriptorCircuit circuit;
  std::vector<DescriptorValues> raw;
  for (const auto& row : rows) {
    raw.push_back(RawDescriptors(AudioBuffer{row, config.sample_rate_hz}, config));
  }
  circuit.norms = FitNormalization(raw);

  CircuitBuilder b(rows);
  const int m = bits.intermediate;
  const int input = b.Input(bits.input);
  const int stft =
      AddFrontEnd(b, input, TransformKind::kStft, approx, bits, config, "stft.");
  const int power = b.Lut(stft, LutFunction{}, m, false, "stft.power");
  const RealMatrix fbank =
      MelFilterbank(config.mel, config.stft, config.sample_rate_hz);
  const int mel_acc =
      b.Conv(power, ConvMode::kChannel, fbank, bits.weight, 1, "mel");
  const int mel = b.Lut(mel_acc, LutFunction{}, bits.output, false, "mel.out");
  const int gt_acc = AddFrontEnd(b, input, TransformKind::kGammatone, approx,
                                 bits, config, "gt.");
  const int gt = b.Lut(gt_acc, LutFunction{}, bits.output, false, "gt.out");
  const int spec = b.Lut(stft, LutFunction{}, bits.output, false, "stft.out");

  const EdgeSpec power_edge = b.graph().node(spec).out;
  const double frames = static_cast<double>(power_edge.frames);
  const double bins = static_cast<double>(power_edge.channels);
  const double gt_channels = static_cast<double>(b.graph().node(gt).out.channels);
  const double mel_channels =
      static_cast<double>(b.graph().node(mel).out.channels);

  const int gt_sum = StdAcrossChannels(b, gt, "gt");
  const int mel_sum = StdAcrossChannels(b, mel, "mel");

  const int power_sum =
      b.ReduceSum(spec, ReduceAxis::kChannels, "rms.power_sum");
  LutFunction rms_fn;
  rms_fn.kind = LutKind::kSqrt;
  rms_fn.pre_scale = 1.0 / bins;
  const int time_bits = SumWidth(power_edge.frames);
  const int rms = b.Lut(power_sum, rms_fn, time_bits, false, "rms");
  const int rms_sum = b.ReduceSum(rms, ReduceAxis::kTime, "rms.total");
  const int rms_ss = b.SquaredDeviationSum(rms, time_bits, "rms");

  // Final LUTs: scale, finish the statistic, normalize.
  std::array<int, kNumDescriptors> sources = {gt_sum, mel_sum, rms_sum, rms_ss};
  std::array<LutFunction, kNumDescriptors> fns;
  fns[0].pre_scale = 1.0 / gt_channels;
  fns[1].pre_scale = 1.0 / mel_channels;
  fns[2].pre_scale = 1.0 / frames;
  fns[3].kind = LutKind::kSqrt;
  fns[3].pre_scale = 1.0 / frames;
  std::vector<double> preview;
  for (int i = 0; i < kNumDescriptors; ++i) {
    fns[i].center = circuit.norms.center[i];
    fns[i].norm = circuit.norms.scale[i];
    for (const RealMatrix& v : b.LutPreview(sources[i], fns[i])) {
      preview.insert(preview.end(), v.data().begin(), v.data().end());
    }
  }
  const QuantParams shared = Calibrate(preview, bits.output, true);
  std::vector<int> outputs;
  for (int i = 0; i < kNumDescriptors; ++i) {
    outputs.push_back(
        b.LutWithParams(sources[i], fns[i], shared, DescriptorNames()[i]));
  }
  b.Concat(outputs, "descriptors");
  circuit.graph = std::move(b.graph());
  return circuit;
}

DescriptorValues RunDescriptorCircuit(const DescriptorCircuit& circuit,
                                      const AudioBuffer& x) {
  const ExecutionResult result = Execute(circuit.graph, x.samples);
  const RealMatrix out = DequantizeOutput(circuit.graph, result.output());
  DescriptorValues values;
  for (int i = 0; i < kNumDescriptors; ++i) values[i] = out(0, i);
  return values;
}

std::string DescriptorCsvHeader() {
  return "file_id,class,m_gstds,m_mstds,mean_rms,std_rms,path";
}

std::string DescriptorCsvRow(const std::string& file_id,
                             const std::string& label,
                             const DescriptorValues& values,
                             const std::string& path) {
  std::string row = file_id + ',' + label;
  char buf[32];
  for (double v : values) {
    std::snprintf(buf, sizeof(buf), ",%.9g", v);
    row += buf;
  }
  return row + ',' + path;
}

}  // namespace qasp
