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


// Four clip-level descriptors: mean over gammatone / Mel channels of the
// per-channel std over time, and mean / std over time of the per-frame RMS.
// Each is z-normalized with constants frozen on the calibration set.

#ifndef QASP_DESCRIPTORS_H_
#define QASP_DESCRIPTORS_H_

#include <array>
#include <span>
#include <string>
#include <vector>

#include "qasp/approx.h"
#include "qasp/circuit.h"
#include "qasp/quant.h"
#include "qasp/signal.h"
#include "qasp/transform.h"

namespace qasp {

inline constexpr int kNumDescriptors = 4;
// m_gstds, m_mstds, mean_rms, std_rms
using DescriptorValues = std::array<double, kNumDescriptors>;
const std::array<std::string, kNumDescriptors>& DescriptorNames();

// rms(m) = sqrt(mean_k power(m, k)).
std::vector<double> RmsPerFrame(const Spectrogram& power);

double Mean(std::span<const double> v);
// Population (divide by n) standard deviation.
double PopulationStd(std::span<const double> v);

// Mean over channels of the per-channel std over frames. Throws for T < 2.
double MeanStdOverTime(const Spectrogram& spec);

// Un-normalized descriptors from the conventional float transforms.
DescriptorValues RawDescriptors(const AudioBuffer& x,
                                const TransformConfig& config);

struct NormalizationConstants {
  DescriptorValues center{};
  DescriptorValues scale{1.0, 1.0, 1.0, 1.0};

  void Validate() const;
  DescriptorValues Apply(const DescriptorValues& raw) const;
};

// Mean and population std per descriptor; a zero std becomes 1.
NormalizationConstants FitNormalization(
    std::span<const DescriptorValues> raw);

DescriptorValues ClearDescriptorVector(const AudioBuffer& x,
                                       const TransformConfig& config,
                                       const NormalizationConstants& norms);

// One circuit computing all four normalized descriptors from a fixed-length
// input; the output is a 1 x 4 row on shared B_o parameters.
struct DescriptorCircuit {
  CircuitGraph graph;
  NormalizationConstants norms;
};

// Throws BudgetViolation when any node exceeds 16 bits.
DescriptorCircuit BuildDescriptorCircuit(const ApproxSpec& approx,
                                         const BitWidthConfig& bits,
                                         const TransformConfig& config,
                                         std::span<const AudioBuffer> calibration);

DescriptorValues RunDescriptorCircuit(const DescriptorCircuit& circuit,
                                      const AudioBuffer& x);

// file_id,class,m_gstds,m_mstds,mean_rms,std_rms,path
std::string DescriptorCsvHeader();
std::string DescriptorCsvRow(const std::string& file_id,
                             const std::string& label,
                             const DescriptorValues& values,
                             const std::string& path);

}  // namespace qasp

#endif  // QASP_DESCRIPTORS_H_
