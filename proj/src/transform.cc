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


#include "qasp/transform.h"

#include <cmath>
#include <stdexcept>

namespace qasp {

TransformKind ParseTransform(const std::string& text) {
  if (text == "stft") return TransformKind::kStft;
  if (text == "mel") return TransformKind::kMel;
  if (text == "mfcc") return TransformKind::kMfcc;
  if (text == "gammatone") return TransformKind::kGammatone;
  throw std::invalid_argument("unknown transform '" + text + "'");
}

std::string TransformName(TransformKind kind) {
  switch (kind) {
    case TransformKind::kStft: return "stft";
    case TransformKind::kMel: return "mel";
    case TransformKind::kMfcc: return "mfcc";
    case TransformKind::kGammatone: return "gammatone";
  }
  return "unknown";
}

void TransformConfig::Validate() const {
  if (sample_rate_hz <= 0) throw std::invalid_argument("sample rate must be > 0");
  stft.Validate();
  if (!(mel.n_mels >= 1 && mel.f_low >= 0.0 && mel.f_low < mel.f_high &&
        mel.f_high <= sample_rate_hz / 2.0)) {
    throw std::invalid_argument("mel spec needs 0 <= f_low < f_high <= fs/2");
  }
  if (n_mfcc < 1 || n_mfcc > mel.n_mels) {
    throw std::invalid_argument("n_mfcc must be in [1, n_mels]");
  }
  if (gammatone.n_filters < 1 || gammatone.order < 1 ||
      !(gammatone.f_low > 0.0 && gammatone.f_low < gammatone.f_high &&
        gammatone.f_high <= sample_rate_hz / 2.0)) {
    throw std::invalid_argument("invalid gammatone spec");
  }
}

GammatoneSpec TransformConfig::EffectiveGammatone() const {
  GammatoneSpec spec = gammatone;
  spec.kernel_length = stft.window_length;
  return spec;
}

KernelBank FrontEndBank(TransformKind kind, const ApproxSpec& approx,
                        const TransformConfig& config) {
  config.Validate();
  ValidateApprox(approx, config.stft.window_length, config.sample_rate_hz);
  KernelBank bank =
      kind == TransformKind::kGammatone
          ? GammatoneKernels(config.EffectiveGammatone(), config.sample_rate_hz)
          : StftKernels(config.stft, HannWindow(config.stft.window_length),
                        config.sample_rate_hz);
  return ApplyApprox(bank, approx);
}

Spectrogram BankEnergy(const AudioBuffer& x, const KernelBank& bank, int hop,
                       bool l1) {
  const RealMatrix out = StridedConvolve(x.samples, bank, hop);
  const auto groups = bank.ChannelGroups();
  Spectrogram energy;
  energy.values = RealMatrix(out.rows(), groups.size());
  energy.channel_freqs = bank.ChannelFreqs();
  for (std::size_t m = 0; m < out.rows(); ++m) {
    for (std::size_t c = 0; c < groups.size(); ++c) {
      double acc = 0.0;
      for (int r : groups[c]) {
        const double v = out(m, r);
        acc += l1 ? std::abs(v) : v * v;
      }
      energy.values(m, c) = acc;
    }
  }
  return energy;
}

Spectrogram ApproxTransform(const AudioBuffer& x, TransformKind kind,
                            const ApproxSpec& approx,
                            const TransformConfig& config) {
  x.Validate();
  const KernelBank bank = FrontEndBank(kind, approx, config);
  Spectrogram energy =
      BankEnergy(x, bank, config.stft.hop, UsesL1Energy(approx));
  if (kind == TransformKind::kStft || kind == TransformKind::kGammatone) {
    return energy;
  }
  const RealMatrix fbank =
      MelFilterbank(config.mel, config.stft, config.sample_rate_hz);
  Spectrogram mel = ApplyFilterbank(energy, fbank);
  if (kind == TransformKind::kMel) return mel;
  Spectrogram cepstrum;
  cepstrum.values = Mfcc(mel, config.n_mfcc);
  return cepstrum;
}

Spectrogram ClearTransform(const AudioBuffer& x, TransformKind kind,
                           const TransformConfig& config) {
  return ApproxTransform(x, kind, Conventional{}, config);
}

}  // namespace qasp
