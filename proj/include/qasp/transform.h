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


// The four transforms as kernel bank + energy stage + optional channel
// matrices, evaluated in floating point with either the conventional bank or
// an approximate one.

#ifndef QASP_TRANSFORM_H_
#define QASP_TRANSFORM_H_

#include <string>

#include "qasp/approx.h"
#include "qasp/matrix.h"
#include "qasp/signal.h"

namespace qasp {

enum class TransformKind { kStft, kMel, kMfcc, kGammatone };

TransformKind ParseTransform(const std::string& text);
std::string TransformName(TransformKind kind);

struct TransformConfig {
  int sample_rate_hz = 16000;
  StftConfig stft;
  MelSpec mel;
  int n_mfcc = 13;
  GammatoneSpec gammatone;  // kernel_length follows stft.window_length

  void Validate() const;
  GammatoneSpec EffectiveGammatone() const;
};

// Kernel bank feeding the energy stage: the (approximated) STFT bank for
// STFT/Mel/MFCC, the (approximated) gammatone bank otherwise.
KernelBank FrontEndBank(TransformKind kind, const ApproxSpec& approx,
                        const TransformConfig& config);

// Per-channel energy of a strided bank output: sum of squares, or sum of
// absolute values under the L1 approximation.
Spectrogram BankEnergy(const AudioBuffer& x, const KernelBank& bank, int hop,
                       bool l1);

// Transform computed with the approximate bank and energy stage.
Spectrogram ApproxTransform(const AudioBuffer& x, TransformKind kind,
                            const ApproxSpec& approx,
                            const TransformConfig& config);

// Reference transform: conventional bank, squared energy.
Spectrogram ClearTransform(const AudioBuffer& x, TransformKind kind,
                           const TransformConfig& config);

}  // namespace qasp

#endif  // QASP_TRANSFORM_H_
