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

// Floating-point time-frequency transforms. Every transform is written as a
// bank of fixed kernels applied with a stride so that the same kernels can be
// quantized and run in the integer circuit.

#ifndef QASP_SIGNAL_H_
#define QASP_SIGNAL_H_

#include <complex>
#include <span>
#include <vector>

#include "qasp/matrix.h"

namespace qasp {

struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate_hz = 16000;

  // Throws std::invalid_argument when empty, non-finite or rate <= 0.
  void Validate() const;
};

struct StftConfig {
  int window_length = 1024;  // N, even
  int hop = 256;             // h, 1 <= h <= N

  int NumBins() const { return window_length / 2 + 1; }
  int NumFrames(std::size_t signal_length) const;
  void Validate() const;
};

// Frames x bins. Bin metadata follows the frame policy: no padding, frames
// fully inside the signal.
struct ComplexSpectrogram {
  RealMatrix real;
  RealMatrix imag;
  std::vector<double> bin_upper_freqs;  // (k + 1) * fs / N

  int NumFrames() const { return static_cast<int>(real.rows()); }
  int NumBins() const { return static_cast<int>(real.cols()); }
  std::complex<double> At(int m, int k) const { return {real(m, k), imag(m, k)}; }
};

// Frames x channels of real features.
struct Spectrogram {
  RealMatrix values;
  std::vector<double> channel_freqs;  // Hz; empty for cepstral features

  int NumFrames() const { return static_cast<int>(values.rows()); }
  int NumChannels() const { return static_cast<int>(values.cols()); }
};

struct MelSpec {
  int n_mels = 64;
  double f_low = 0.0;
  double f_high = 8000.0;
};

struct GammatoneSpec {
  int n_filters = 64;
  int order = 4;
  double f_low = 50.0;
  double f_high = 7200.0;
  int kernel_length = 1024;
};

// How a kernel row was built from a carrier exp(-2j*pi*nu*n): its real or
// its imaginary part, times an envelope.
enum class CarrierPart { kReal, kImag };

struct KernelRow {
  std::vector<double> taps;
  std::vector<double> envelope;
  double cycles_per_sample = 0.0;  // nu
  CarrierPart part = CarrierPart::kReal;
  int channel = 0;           // output channel (STFT bin or filter index)
  double center_hz = 0.0;    // used by cropping and frequency-adaptive windows
  int max_dilation = 1;      // per-channel Nyquist-derived dilation cap
};

enum class BankKind { kStft, kGammatone };

// 2K rows for the STFT (all real parts, then all imaginary parts) or one row
// per gammatone filter. Rows sharing a channel are combined by the energy
// stage.
struct KernelBank {
  BankKind kind = BankKind::kStft;
  int length = 0;
  int sample_rate_hz = 16000;
  int num_channels = 0;
  std::vector<KernelRow> rows;

  std::size_t NumRows() const { return rows.size(); }
  // Rows feeding each output channel.
  std::vector<std::vector<int>> ChannelGroups() const;
  std::vector<double> ChannelFreqs() const;
};

// w(n) = 0.5 * (1 - cos(2 pi n / N)), 0 <= n < N. Throws for N < 2.
std::vector<double> HannWindow(int length);

// Direct evaluation of the framewise windowed DFT, bins 0..N/2.
ComplexSpectrogram Stft(const AudioBuffer& x, const StftConfig& cfg,
                        std::span<const double> window);

// Two-sided DFT of one real frame (debug path used by identity checks).
std::vector<std::complex<double>> FullDft(std::span<const double> frame);

Spectrogram PowerSpectrogram(const ComplexSpectrogram& spec);

// Real kernels w(n)cos(2 pi k n / N) and imaginary kernels -w(n)sin(...).
KernelBank StftKernels(const StftConfig& cfg, std::span<const double> window,
                       int sample_rate_hz);

// Frames x rows: out(m, r) = sum_n x[m*stride + n] * taps_r[n].
RealMatrix StridedConvolve(std::span<const double> x, const KernelBank& bank,
                           int stride);

// Reassembles an STFT-layout bank output into a complex spectrogram.
ComplexSpectrogram StftFromKernels(const AudioBuffer& x, const KernelBank& bank,
                                   int hop);

// HTK mel scale.
double HzToMel(double hz);
double MelToHz(double mel);

// n_mels x K triangular filters, each row rescaled to peak 1. Throws when a
// filter covers no bin.
RealMatrix MelFilterbank(const MelSpec& spec, const StftConfig& cfg,
                         int sample_rate_hz);

// Applies an n_channels x K filterbank to a frames x K spectrogram.
Spectrogram ApplyFilterbank(const Spectrogram& spec, const RealMatrix& fbank);

inline constexpr double kLogFloor = 1e-6;

// Orthonormal DCT-II matrix, n_out x n_in.
RealMatrix DctMatrix(int n_in, int n_out);

// DCT-II of log(mel + 1e-6), first n_mfcc coefficients per frame.
RealMatrix Mfcc(const Spectrogram& mel, int n_mfcc);

// Glasberg-Moore equivalent rectangular bandwidth in Hz.
double Erb(double hz);
// Center frequencies equally spaced on the ERB-rate scale, inclusive ends.
std::vector<double> ErbSpacedFrequencies(double f_low, double f_high, int count);

// Peak-normalized sampled gammatone impulse responses
//   t^(order-1) exp(-2 pi b t) cos(2 pi fc t),  b = 1.019 ERB(fc).
KernelBank GammatoneKernels(const GammatoneSpec& spec, int sample_rate_hz);

// Frames x filters of squared filter outputs.
Spectrogram GammatoneSpectrogram(const AudioBuffer& x, const KernelBank& bank,
                                 int hop);

}  // namespace qasp

#endif  // QASP_SIGNAL_H_
