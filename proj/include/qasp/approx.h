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

// Approximate STFT formulations expressed as kernel-bank rewrites, plus the
// closed-form error expressions and bounds that go with them.
//
// Every rewrite keeps the bank shape (rows x length); it only zeroes taps or
// whole rows, reshapes the envelope, or projects the carrier coefficients.

#ifndef QASP_APPROX_H_
#define QASP_APPROX_H_

#include <complex>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qasp/matrix.h"
#include "qasp/signal.h"

namespace qasp {

inline constexpr int kMaxDilation = std::numeric_limits<int>::max();

struct Conventional {};
struct Dilation {
  int d = 2;  // kMaxDilation together with per_bin_cap selects d = d_k
  bool per_bin_cap = true;
};
struct FreqAdaptiveWindow {
  int n_min = 80;
};
struct Poorman {
  int L = 4;
};
struct L1Energy {};
struct Cropping {
  double f_min = 0.0;
  double f_max = 1000.0;
};

using ApproxSpec =
    std::variant<Conventional, Dilation, FreqAdaptiveWindow, Poorman, L1Energy,
                 Cropping>;

// conventional | dilation:D[:nocap] | dilation:max | fdwindow:NMIN | poorman:L | l1 |
// crop:FMIN:FMAX
ApproxSpec ParseApprox(const std::string& text);
std::string ApproxToString(const ApproxSpec& spec);
void ValidateApprox(const ApproxSpec& spec, int window_length,
                    int sample_rate_hz);
bool UsesL1Energy(const ApproxSpec& spec);

// d_k = max(1, floor(N / (2(k+1)))).
int MaxDilationPerBin(int window_length, int bin);

// Zeroes taps whose index is not a multiple of min(d, d_k) (d alone when
// per_bin_cap is false).
KernelBank DilationKernels(const KernelBank& bank, int d, bool per_bin_cap);

struct DilationErrorReport {
  RealMatrix masked_sum;  // |sum x w e (1 - mask)|
  RealMatrix direct;      // |X - X^(d)|
};
DilationErrorReport DilationError(const AudioBuffer& x, const StftConfig& cfg,
                                  std::span<const double> window, int d,
                                  bool per_bin_cap);

// max |X^(d)(m,k) - (1/d) sum_j X[m, k - jN/d]| for uniform dilation, with X
// the two-sided DFT of each windowed frame. d must divide N.
double DilationAliasingDeviation(const AudioBuffer& x, const StftConfig& cfg,
                                 std::span<const double> window, int d);

// N^fd(k) = min(N, N_min * f_max / f_k), f_k = k fs / N, floored and clamped
// to [N_min, N].
int FdWindowWidth(int bin, int window_length, int n_min, double f_max,
                  int sample_rate_hz);
// Hann window of width N^fd(k) centered in the N-sample frame; an odd number
// of padding zeros puts the extra zero on the right.
std::vector<double> FdWindow(int bin, int window_length, int n_min,
                             double f_max, int sample_rate_hz);
// STFT banks get the centered narrow window; gammatone rows keep the first
// N^fd taps of their impulse response.
KernelBank FdWindowKernels(const KernelBank& bank, int n_min, double f_max);

struct RootOfUnity {
  int index = 0;               // l
  std::complex<double> value;  // exp(-2j pi l / L)
};
// Nearest L-th root of unity exp(-2j pi l / L) to exp(j angle); ties go to
// the smaller l.
RootOfUnity PoormanProject(double angle, int L);
// Same projection for a position u = -angle L / (2 pi) measured in root
// steps; used for exact rational angles.
int NearestRootIndex(double u, int L);

KernelBank PoormanKernels(const KernelBank& bank, int L);

// 2 |sin(pi / 2L)| * ||x w_m||_2 over frame m.
double PoormanBound(std::span<const double> x, std::span<const double> window,
                    int hop, int m, int L);
// 2 |sin(pi / 2L)| * ||x w_m||_1, which the error never exceeds.
double PoormanL1Bound(std::span<const double> x, std::span<const double> window,
                      int hop, int m, int L);

struct BoundReport {
  RealMatrix bound;
  RealMatrix empirical;
  Matrix<unsigned char> satisfied;  // empirical <= bound * (1 + 1e-9)

  bool AllSatisfied() const;
  std::size_t NumViolations() const;
  double WorstRatio() const;  // max empirical / bound over bound > 0
};
enum class PoormanBoundKind { kStated, kTriangle };
BoundReport PoormanBoundReport(const AudioBuffer& x, const StftConfig& cfg,
                               std::span<const double> window, int L,
                               PoormanBoundKind kind = PoormanBoundKind::kStated);

// |Re X| + |Im X| per entry.
Spectrogram L1EnergySpectrogram(const ComplexSpectrogram& spec);
// | |X|^2 - (|Re X| + |Im X|) | per entry.
RealMatrix L1EnergyError(const ComplexSpectrogram& spec);

// Zeroes every row whose center frequency lies outside [f_min, f_max].
KernelBank CropKernels(const KernelBank& bank, double f_min, double f_max);
// |X(m,k)| (1[f_k > f_max] + 1[f_k < f_min]).
RealMatrix CropError(const ComplexSpectrogram& spec,
                     std::span<const double> center_freqs, double f_min,
                     double f_max);

// Kernel rewrite selected by the spec (L1 energy leaves kernels unchanged).
KernelBank ApplyApprox(const KernelBank& bank, const ApproxSpec& spec);

}  // namespace qasp

#endif  // QASP_APPROX_H_
