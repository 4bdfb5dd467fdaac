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

#include "qasp/signal.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qasp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// cos/sin of 2 pi j / N for j in [0, N), indexed by (k * n) mod N so that the
// direct STFT and the kernel bank share identical twiddles.
struct Twiddles {
  explicit Twiddles(int n) : cos_(n), sin_(n) {
    for (int j = 0; j < n; ++j) {
      cos_[j] = std::cos(kTwoPi * j / n);
      sin_[j] = std::sin(kTwoPi * j / n);
    }
  }
  std::vector<double> cos_;
  std::vector<double> sin_;
};

}  // namespace

void AudioBuffer::Validate() const {
  if (samples.empty()) throw std::invalid_argument("audio buffer is empty");
  if (sample_rate_hz <= 0) {
    throw std::invalid_argument("sample rate must be positive");
  }
  for (double s : samples) {
    if (!std::isfinite(s)) {
      throw std::invalid_argument("audio buffer has non-finite samples");
    }
  }
}

void StftConfig::Validate() const {
  if (window_length < 2 || window_length % 2 != 0) {
    throw std::invalid_argument("window length must be even and >= 2");
  }
  if (hop < 1 || hop > window_length) {
    throw std::invalid_argument("hop must be in [1, window_length]");
  }
}

int StftConfig::NumFrames(std::size_t signal_length) const {
  if (signal_length < static_cast<std::size_t>(window_length)) {
    throw std::invalid_argument("signal shorter than one frame (" +
                                std::to_string(signal_length) + " < " +
                                std::to_string(window_length) + ")");
  }
  return static_cast<int>((signal_length - window_length) / hop) + 1;
}

std::vector<std::vector<int>> KernelBank::ChannelGroups() const {
  std::vector<std::vector<int>> groups(num_channels);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    groups.at(rows[r].channel).push_back(static_cast<int>(r));
  }
  return groups;
}

std::vector<double> KernelBank::ChannelFreqs() const {
  std::vector<double> freqs(num_channels, 0.0);
  for (const KernelRow& row : rows) freqs.at(row.channel) = row.center_hz;
  return freqs;
}

std::vector<double> HannWindow(int length) {
  if (length < 2) throw std::invalid_argument("Hann window needs N >= 2");
  std::vector<double> w(length);
  for (int n = 0; n < length; ++n) {
    w[n] = 0.5 * (1.0 - std::cos(kTwoPi * n / length));
  }
  return w;
}

ComplexSpectrogram Stft(const AudioBuffer& x, const StftConfig& cfg,
                        std::span<const double> window) {
  x.Validate();
  cfg.Validate();
  const int n_len = cfg.window_length;
  if (static_cast<int>(window.size()) != n_len) {
    throw std::invalid_argument("window length does not match config");
  }
  const int frames = cfg.NumFrames(x.samples.size());
  const int bins = cfg.NumBins();
  const Twiddles tw(n_len);

  ComplexSpectrogram out;
  out.real = RealMatrix(frames, bins);
  out.imag = RealMatrix(frames, bins);
  std::vector<double> frame(n_len);
  for (int m = 0; m < frames; ++m) {
    for (int n = 0; n < n_len; ++n) {
      frame[n] = x.samples[static_cast<std::size_t>(m) * cfg.hop + n] * window[n];
    }
    for (int k = 0; k < bins; ++k) {
      double re = 0.0;
      double im = 0.0;
      for (int n = 0; n < n_len; ++n) {
        const int j = static_cast<int>((static_cast<long long>(k) * n) % n_len);
        re += frame[n] * tw.cos_[j];
        im -= frame[n] * tw.sin_[j];
      }
      out.real(m, k) = re;
      out.imag(m, k) = im;
    }
  }
  out.bin_upper_freqs.resize(bins);
  for (int k = 0; k < bins; ++k) {
    out.bin_upper_freqs[k] =
        static_cast<double>(k + 1) * x.sample_rate_hz / n_len;
  }
  return out;
}

std::vector<std::complex<double>> FullDft(std::span<const double> frame) {
  const int n_len = static_cast<int>(frame.size());
  const Twiddles tw(n_len);
  std::vector<std::complex<double>> out(n_len);
  for (int k = 0; k < n_len; ++k) {
    double re = 0.0;
    double im = 0.0;
    for (int n = 0; n < n_len; ++n) {
      const int j = static_cast<int>((static_cast<long long>(k) * n) % n_len);
      re += frame[n] * tw.cos_[j];
      im -= frame[n] * tw.sin_[j];
    }
    out[k] = {re, im};
  }
  return out;
}

Spectrogram PowerSpectrogram(const ComplexSpectrogram& spec) {
  Spectrogram out;
  out.values = RealMatrix(spec.real.rows(), spec.real.cols());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const double re = spec.real.data()[i];
    const double im = spec.imag.data()[i];
    out.values.data()[i] = re * re + im * im;
  }
  out.channel_freqs = spec.bin_upper_freqs;
  return out;
}

KernelBank StftKernels(const StftConfig& cfg, std::span<const double> window,
                       int sample_rate_hz) {
  cfg.Validate();
  const int n_len = cfg.window_length;
  if (static_cast<int>(window.size()) != n_len) {
    throw std::invalid_argument("window length does not match config");
  }
  const int bins = cfg.NumBins();
  const Twiddles tw(n_len);
  KernelBank bank;
  bank.length = n_len;
  bank.sample_rate_hz = sample_rate_hz;
  bank.num_channels = bins;
  bank.rows.reserve(2 * bins);
  for (CarrierPart part : {CarrierPart::kReal, CarrierPart::kImag}) {
    for (int k = 0; k < bins; ++k) {
      KernelRow row;
      row.envelope.assign(window.begin(), window.end());
      row.cycles_per_sample = static_cast<double>(k) / n_len;
      row.part = part;
      row.channel = k;
      row.center_hz = static_cast<double>(k) * sample_rate_hz / n_len;
      row.max_dilation = std::max(1, n_len / (2 * (k + 1)));
      row.taps.resize(n_len);
      for (int n = 0; n < n_len; ++n) {
        const int j = static_cast<int>((static_cast<long long>(k) * n) % n_len);
        row.taps[n] = part == CarrierPart::kReal ? window[n] * tw.cos_[j]
                                                 : -(window[n] * tw.sin_[j]);
      }
      bank.rows.push_back(std::move(row));
    }
  }
  return bank;
}

RealMatrix StridedConvolve(std::span<const double> x, const KernelBank& bank,
                           int stride) {
  if (stride < 1) throw std::invalid_argument("stride must be positive");
  if (x.size() < static_cast<std::size_t>(bank.length)) {
    throw std::invalid_argument("signal shorter than one frame");
  }
  const int frames =
      static_cast<int>((x.size() - bank.length) / stride) + 1;
  RealMatrix out(frames, bank.NumRows());
  for (int m = 0; m < frames; ++m) {
    const double* frame = x.data() + static_cast<std::size_t>(m) * stride;
    for (std::size_t r = 0; r < bank.NumRows(); ++r) {
      const std::vector<double>& taps = bank.rows[r].taps;
      double acc = 0.0;
      for (int n = 0; n < bank.length; ++n) acc += frame[n] * taps[n];
      out(m, r) = acc;
    }
  }
  return out;
}

ComplexSpectrogram StftFromKernels(const AudioBuffer& x, const KernelBank& bank,
                                   int hop) {
  x.Validate();
  const int bins = bank.num_channels;
  if (static_cast<int>(bank.NumRows()) != 2 * bins) {
    throw std::invalid_argument("kernel bank is not in STFT layout");
  }
  const RealMatrix conv = StridedConvolve(x.samples, bank, hop);
  ComplexSpectrogram out;
  out.real = RealMatrix(conv.rows(), bins);
  out.imag = RealMatrix(conv.rows(), bins);
  for (std::size_t m = 0; m < conv.rows(); ++m) {
    for (int k = 0; k < bins; ++k) {
      out.real(m, k) = conv(m, k);
      out.imag(m, k) = conv(m, k + bins);
    }
  }
  out.bin_upper_freqs.resize(bins);
  for (int k = 0; k < bins; ++k) {
    out.bin_upper_freqs[k] =
        static_cast<double>(k + 1) * x.sample_rate_hz / bank.length;
  }
  return out;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

RealMatrix MelFilterbank(const MelSpec& spec, const StftConfig& cfg,
                         int sample_rate_hz) {
  cfg.Validate();
  if (spec.n_mels < 1) throw std::invalid_argument("n_mels must be positive");
  if (!(spec.f_low >= 0.0 && spec.f_low < spec.f_high &&
        spec.f_high <= sample_rate_hz / 2.0)) {
    throw std::invalid_argument("mel range must satisfy 0 <= f_low < f_high <= fs/2");
  }
  const int bins = cfg.NumBins();
  const double mel_lo = HzToMel(spec.f_low);
  const double mel_hi = HzToMel(spec.f_high);
  std::vector<double> edges(spec.n_mels + 2);
  for (int i = 0; i < spec.n_mels + 2; ++i) {
    edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (spec.n_mels + 1));
  }
  RealMatrix fbank(spec.n_mels, bins);
  for (int f = 0; f < spec.n_mels; ++f) {
    const double left = edges[f];
    const double center = edges[f + 1];
    const double right = edges[f + 2];
    double peak = 0.0;
    for (int k = 0; k < bins; ++k) {
      const double hz = static_cast<double>(k) * sample_rate_hz / cfg.window_length;
      double v = 0.0;
      if (hz > left && hz <= center) {
        v = (hz - left) / (center - left);
      } else if (hz > center && hz < right) {
        v = (right - hz) / (right - center);
      }
      fbank(f, k) = v;
      peak = std::max(peak, v);
    }
    if (peak <= 0.0) {
      throw std::invalid_argument("mel filter " + std::to_string(f) +
                                  " covers no frequency bin; reduce n_mels");
    }
    for (int k = 0; k < bins; ++k) fbank(f, k) /= peak;
  }
  return fbank;
}

Spectrogram ApplyFilterbank(const Spectrogram& spec, const RealMatrix& fbank) {
  if (fbank.cols() != spec.values.cols()) {
    throw std::invalid_argument("filterbank width does not match spectrogram");
  }
  Spectrogram out;
  out.values = RealMatrix(spec.values.rows(), fbank.rows());
  for (std::size_t m = 0; m < spec.values.rows(); ++m) {
    for (std::size_t f = 0; f < fbank.rows(); ++f) {
      double acc = 0.0;
      for (std::size_t k = 0; k < fbank.cols(); ++k) {
        acc += fbank(f, k) * spec.values(m, k);
      }
      out.values(m, f) = acc;
    }
  }
  return out;
}

RealMatrix DctMatrix(int n_in, int n_out) {
  if (n_out < 1 || n_out > n_in) {
    throw std::invalid_argument("DCT output size must be in [1, n_in]");
  }
  RealMatrix d(n_out, n_in);
  for (int i = 0; i < n_out; ++i) {
    const double scale = std::sqrt((i == 0 ? 1.0 : 2.0) / n_in);
    for (int j = 0; j < n_in; ++j) {
      d(i, j) = scale * std::cos(std::numbers::pi * i * (j + 0.5) / n_in);
    }
  }
  return d;
}

RealMatrix Mfcc(const Spectrogram& mel, int n_mfcc) {
  const int n_mels = mel.NumChannels();
  const RealMatrix dct = DctMatrix(n_mels, n_mfcc);
  RealMatrix out(mel.values.rows(), n_mfcc);
  std::vector<double> logmel(n_mels);
  for (std::size_t m = 0; m < mel.values.rows(); ++m) {
    for (int j = 0; j < n_mels; ++j) {
      logmel[j] = std::log(mel.values(m, j) + kLogFloor);
    }
    for (int i = 0; i < n_mfcc; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n_mels; ++j) acc += dct(i, j) * logmel[j];
      out(m, i) = acc;
    }
  }
  return out;
}

double Erb(double hz) { return 24.7 * (4.37 * hz / 1000.0 + 1.0); }

std::vector<double> ErbSpacedFrequencies(double f_low, double f_high,
                                         int count) {
  if (count < 1 || !(f_low > 0.0 && f_low < f_high)) {
    throw std::invalid_argument("ERB spacing needs 0 < f_low < f_high, count >= 1");
  }
  auto rate = [](double f) { return 21.4 * std::log10(1.0 + 0.00437 * f); };
  auto inverse = [](double e) {
    return (std::pow(10.0, e / 21.4) - 1.0) / 0.00437;
  };
  const double lo = rate(f_low);
  const double hi = rate(f_high);
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) {
    out[i] = count == 1 ? f_low : inverse(lo + (hi - lo) * i / (count - 1));
  }
  return out;
}

KernelBank GammatoneKernels(const GammatoneSpec& spec, int sample_rate_hz) {
  if (spec.order < 1) throw std::invalid_argument("gammatone order must be >= 1");
  if (spec.kernel_length < 2) {
    throw std::invalid_argument("gammatone kernel length must be >= 2");
  }
  if (spec.f_high > sample_rate_hz / 2.0) {
    throw std::invalid_argument("gammatone f_high above Nyquist");
  }
  const std::vector<double> centers =
      ErbSpacedFrequencies(spec.f_low, spec.f_high, spec.n_filters);
  KernelBank bank;
  bank.kind = BankKind::kGammatone;
  bank.length = spec.kernel_length;
  bank.sample_rate_hz = sample_rate_hz;
  bank.num_channels = spec.n_filters;
  for (int c = 0; c < spec.n_filters; ++c) {
    const double fc = centers[c];
    const double b = 1.019 * Erb(fc);
    KernelRow row;
    row.cycles_per_sample = fc / sample_rate_hz;
    row.part = CarrierPart::kReal;
    row.channel = c;
    row.center_hz = fc;
    row.max_dilation =
        std::max(1, static_cast<int>(std::floor(sample_rate_hz / (2.0 * fc))));
    row.envelope.resize(spec.kernel_length);
    row.taps.resize(spec.kernel_length);
    double peak = 0.0;
    for (int n = 0; n < spec.kernel_length; ++n) {
      const double t = static_cast<double>(n) / sample_rate_hz;
      row.envelope[n] = std::pow(t, spec.order - 1) * std::exp(-kTwoPi * b * t);
      row.taps[n] = row.envelope[n] * std::cos(kTwoPi * row.cycles_per_sample * n);
      peak = std::max(peak, std::abs(row.taps[n]));
    }
    if (peak <= 0.0) throw std::invalid_argument("degenerate gammatone kernel");
    for (int n = 0; n < spec.kernel_length; ++n) {
      row.envelope[n] /= peak;
      row.taps[n] /= peak;
    }
    bank.rows.push_back(std::move(row));
  }
  return bank;
}

Spectrogram GammatoneSpectrogram(const AudioBuffer& x, const KernelBank& bank,
                                 int hop) {
  x.Validate();
  const RealMatrix conv = StridedConvolve(x.samples, bank, hop);
  Spectrogram out;
  out.values = RealMatrix(conv.rows(), bank.num_channels);
  for (std::size_t m = 0; m < conv.rows(); ++m) {
    for (std::size_t r = 0; r < bank.NumRows(); ++r) {
      const double v = conv(m, r);
      out.values(m, bank.rows[r].channel) += v * v;
    }
  }
  out.channel_freqs = bank.ChannelFreqs();
  return out;
}

}  // namespace qasp
