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

#include "qasp/approx.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace qasp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::vector<std::string> Split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

int ParseInt(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("bad integer '" + s + "' in '" + context + "'");
}

double ParseDouble(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("bad number '" + s + "' in '" + context + "'");
}

int EffectiveDilation(const KernelRow& row, int d, bool per_bin_cap) {
  return per_bin_cap ? std::min(d, row.max_dilation) : d;
}

std::vector<double> FrameProduct(std::span<const double> x,
                                 std::span<const double> window, int hop,
                                 int m) {
  const std::size_t start = static_cast<std::size_t>(m) * hop;
  if (start + window.size() > x.size()) {
    throw std::invalid_argument("frame extends past the end of the signal");
  }
  std::vector<double> out(window.size());
  for (std::size_t n = 0; n < window.size(); ++n) {
    out[n] = x[start + n] * window[n];
  }
  return out;
}

}  // namespace

ApproxSpec ParseApprox(const std::string& text) {
  const std::vector<std::string> parts = Split(text, ':');
  if (parts.empty()) throw std::invalid_argument("empty approximation spec");
  const std::string& kind = parts[0];
  ApproxSpec spec;
  if (kind == "conventional" && parts.size() == 1) {
    spec = Conventional{};
  } else if (kind == "dilation" && (parts.size() == 2 || parts.size() == 3)) {
    if (parts[1] == "max" && parts.size() == 2) {
      spec = Dilation{kMaxDilation, true};
    } else if (parts.size() == 2) {
      spec = Dilation{ParseInt(parts[1], text), true};
    } else if (parts[2] == "nocap") {
      spec = Dilation{ParseInt(parts[1], text), false};
    } else {
      throw std::invalid_argument("unknown dilation option in '" + text + "'");
    }
  } else if (kind == "fdwindow" && parts.size() == 2) {
    spec = FreqAdaptiveWindow{ParseInt(parts[1], text)};
  } else if (kind == "poorman" && parts.size() == 2) {
    spec = Poorman{ParseInt(parts[1], text)};
  } else if (kind == "l1" && parts.size() == 1) {
    spec = L1Energy{};
  } else if (kind == "crop" && parts.size() == 3) {
    spec = Cropping{ParseDouble(parts[1], text), ParseDouble(parts[2], text)};
  } else {
    throw std::invalid_argument("unknown approximation '" + text + "'");
  }
  // Range checks that need neither N nor fs.
  ValidateApprox(spec, std::numeric_limits<int>::max(),
                 std::numeric_limits<int>::max());
  return spec;
}

std::string ApproxToString(const ApproxSpec& spec) {
  return std::visit(
      Overloaded{
          [](const Conventional&) { return std::string("conventional"); },
          [](const Dilation& d) {
            if (d.d == kMaxDilation) return std::string("dilation:max");
            return "dilation:" + std::to_string(d.d) +
                   (d.per_bin_cap ? std::string() : std::string(":nocap"));
          },
          [](const FreqAdaptiveWindow& f) {
            return "fdwindow:" + std::to_string(f.n_min);
          },
          [](const Poorman& p) { return "poorman:" + std::to_string(p.L); },
          [](const L1Energy&) { return std::string("l1"); },
          [](const Cropping& c) {
            std::ostringstream os;
            os << "crop:" << c.f_min << ':' << c.f_max;
            return os.str();
          },
      },
      spec);
}

void ValidateApprox(const ApproxSpec& spec, int window_length,
                    int sample_rate_hz) {
  std::visit(
      Overloaded{
          [](const Conventional&) {},
          [](const Dilation& d) {
            if (d.d < 1) throw std::invalid_argument("dilation d must be >= 1");
            if (d.d == kMaxDilation && !d.per_bin_cap) {
              throw std::invalid_argument("maximal dilation needs the per-bin cap");
            }
          },
          [&](const FreqAdaptiveWindow& f) {
            if (f.n_min < 2 || f.n_min > window_length) {
              throw std::invalid_argument("fdwindow N_min must be in [2, N]");
            }
          },
          [](const Poorman& p) {
            if (p.L < 2) throw std::invalid_argument("poorman L must be >= 2");
          },
          [](const L1Energy&) {},
          [&](const Cropping& c) {
            if (!(c.f_min >= 0.0 && c.f_min < c.f_max &&
                  c.f_max <= sample_rate_hz / 2.0)) {
              throw std::invalid_argument(
                  "cropping needs 0 <= f_min < f_max <= fs/2");
            }
          },
      },
      spec);
}

bool UsesL1Energy(const ApproxSpec& spec) {
  return std::holds_alternative<L1Energy>(spec);
}

int MaxDilationPerBin(int window_length, int bin) {
  if (bin < 0 || bin > window_length / 2) {
    throw std::invalid_argument("bin index out of range");
  }
  return std::max(1, window_length / (2 * (bin + 1)));
}

KernelBank DilationKernels(const KernelBank& bank, int d, bool per_bin_cap) {
  if (d < 1) throw std::invalid_argument("dilation d must be >= 1");
  KernelBank out = bank;
  for (KernelRow& row : out.rows) {
    const int step = EffectiveDilation(row, d, per_bin_cap);
    for (int n = 0; n < out.length; ++n) {
      if (n % step != 0) row.taps[n] = 0.0;
    }
  }
  return out;
}

DilationErrorReport DilationError(const AudioBuffer& x, const StftConfig& cfg,
                                  std::span<const double> window, int d,
                                  bool per_bin_cap) {
  const KernelBank base = StftKernels(cfg, window, x.sample_rate_hz);
  const KernelBank dilated = DilationKernels(base, d, per_bin_cap);
  // Complement bank: the taps the dilation drops.
  KernelBank dropped = base;
  for (KernelRow& row : dropped.rows) {
    const int step = EffectiveDilation(row, d, per_bin_cap);
    for (int n = 0; n < dropped.length; ++n) {
      if (n % step == 0) row.taps[n] = 0.0;
    }
  }
  const ComplexSpectrogram full = StftFromKernels(x, base, cfg.hop);
  const ComplexSpectrogram approx = StftFromKernels(x, dilated, cfg.hop);
  const ComplexSpectrogram residual = StftFromKernels(x, dropped, cfg.hop);

  DilationErrorReport report;
  report.masked_sum = RealMatrix(full.real.rows(), full.real.cols());
  report.direct = RealMatrix(full.real.rows(), full.real.cols());
  for (int m = 0; m < full.NumFrames(); ++m) {
    for (int k = 0; k < full.NumBins(); ++k) {
      report.masked_sum(m, k) = std::abs(residual.At(m, k));
      report.direct(m, k) = std::abs(full.At(m, k) - approx.At(m, k));
    }
  }
  return report;
}

double DilationAliasingDeviation(const AudioBuffer& x, const StftConfig& cfg,
                                 std::span<const double> window, int d) {
  const int n = cfg.window_length;
  if (d < 1 || n % d != 0) throw std::invalid_argument("d must divide N");
  const ComplexSpectrogram xd = StftFromKernels(
      x, DilationKernels(StftKernels(cfg, window, x.sample_rate_hz), d, false),
      cfg.hop);
  double worst = 0.0;
  std::vector<double> frame(n);
  for (int m = 0; m < xd.NumFrames(); ++m) {
    for (int i = 0; i < n; ++i) frame[i] = x.samples[m * cfg.hop + i] * window[i];
    const std::vector<std::complex<double>> full = FullDft(frame);
    for (int k = 0; k < xd.NumBins(); ++k) {
      std::complex<double> alias = 0.0;
      for (int j = 0; j < d; ++j) alias += full[((k - j * n / d) % n + n) % n];
      worst = std::max(worst, std::abs(xd.At(m, k) - alias / static_cast<double>(d)));
    }
  }
  return worst;
}

int FdWindowWidth(int bin, int window_length, int n_min, double f_max,
                  int sample_rate_hz) {
  if (n_min < 2 || n_min > window_length) {
    throw std::invalid_argument("N_min must be in [2, N]");
  }
  const double f_k = static_cast<double>(bin) * sample_rate_hz / window_length;
  if (f_k <= 0.0) return window_length;
  const double width = std::floor(n_min * f_max / f_k);
  if (width >= window_length) return window_length;
  return std::max(n_min, static_cast<int>(width));
}

std::vector<double> FdWindow(int bin, int window_length, int n_min,
                             double f_max, int sample_rate_hz) {
  const int width =
      FdWindowWidth(bin, window_length, n_min, f_max, sample_rate_hz);
  const std::vector<double> narrow = HannWindow(width);
  std::vector<double> w(window_length, 0.0);
  const int left = (window_length - width) / 2;
  std::copy(narrow.begin(), narrow.end(), w.begin() + left);
  return w;
}

KernelBank FdWindowKernels(const KernelBank& bank, int n_min, double f_max) {
  KernelBank out = bank;
  const int n_len = bank.length;
  for (KernelRow& row : out.rows) {
    if (bank.kind == BankKind::kStft) {
      const std::vector<double> w = FdWindow(row.channel, n_len, n_min, f_max,
                                             bank.sample_rate_hz);
      for (int n = 0; n < n_len; ++n) {
        const long long j = (static_cast<long long>(row.channel) * n) % n_len;
        const double angle = kTwoPi * static_cast<double>(j) / n_len;
        const double carrier =
            row.part == CarrierPart::kReal ? std::cos(angle) : -std::sin(angle);
        row.taps[n] = w[n] * carrier;
      }
      row.envelope = w;
    } else {
      const double f_c = row.center_hz;
      int width = n_len;
      if (f_c > 0.0) {
        const double raw = std::floor(n_min * f_max / f_c);
        width = raw >= n_len ? n_len : std::max(n_min, static_cast<int>(raw));
      }
      for (int n = width; n < n_len; ++n) {
        row.taps[n] = 0.0;
        row.envelope[n] = 0.0;
      }
    }
  }
  return out;
}

int NearestRootIndex(double u, int L) {
  if (L < 2) throw std::invalid_argument("poorman L must be >= 2");
  double pos = std::fmod(u, static_cast<double>(L));
  if (pos < 0.0) pos += L;
  const double lower = std::floor(pos);
  const double frac = pos - lower;
  long long index;
  if (frac < 0.5) {
    index = static_cast<long long>(lower);
  } else if (frac > 0.5) {
    index = static_cast<long long>(lower) + 1;
  } else {
    const long long a = static_cast<long long>(lower) % L;
    const long long b = (static_cast<long long>(lower) + 1) % L;
    index = std::min(a, b);
  }
  return static_cast<int>(index % L);
}

namespace {

// exp(-2j pi l / L), exact at quarter turns.
std::complex<double> RootValue(int l, int L) {
  if ((4LL * l) % L == 0) {
    switch ((4LL * l / L) % 4) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, -1.0};
      case 2: return {-1.0, 0.0};
      default: return {0.0, 1.0};
    }
  }
  return std::polar(1.0, -kTwoPi * l / L);
}

}  // namespace

RootOfUnity PoormanProject(double angle, int L) {
  const int l = NearestRootIndex(-angle * L / kTwoPi, L);
  return {l, RootValue(l, L)};
}

KernelBank PoormanKernels(const KernelBank& bank, int L) {
  if (L < 2) throw std::invalid_argument("poorman L must be >= 2");
  KernelBank out = bank;
  const int n_len = bank.length;
  for (KernelRow& row : out.rows) {
    // STFT carriers have rational angles k n / N; keep them exact.
    const long long k = std::llround(row.cycles_per_sample * n_len);
    const bool rational =
        bank.kind == BankKind::kStft &&
        std::abs(static_cast<double>(k) / n_len - row.cycles_per_sample) < 1e-15;
    for (int n = 0; n < n_len; ++n) {
      if (row.taps[n] == 0.0 && row.envelope[n] == 0.0) continue;
      double u;
      if (rational) {
        u = static_cast<double>(((k * n) % n_len) * L) / n_len;
      } else {
        u = row.cycles_per_sample * n * L;
      }
      const int l = NearestRootIndex(u, L);
      const std::complex<double> p = RootValue(l, L);
      row.taps[n] = row.envelope[n] *
                    (row.part == CarrierPart::kReal ? p.real() : p.imag());
    }
  }
  return out;
}

double PoormanBound(std::span<const double> x, std::span<const double> window,
                    int hop, int m, int L) {
  if (L < 2) throw std::invalid_argument("poorman L must be >= 2");
  double energy = 0.0;
  for (double v : FrameProduct(x, window, hop, m)) energy += v * v;
  return 2.0 * std::abs(std::sin(std::numbers::pi / (2.0 * L))) *
         std::sqrt(energy);
}

double PoormanL1Bound(std::span<const double> x, std::span<const double> window,
                      int hop, int m, int L) {
  if (L < 2) throw std::invalid_argument("poorman L must be >= 2");
  double l1 = 0.0;
  for (double v : FrameProduct(x, window, hop, m)) l1 += std::abs(v);
  return 2.0 * std::abs(std::sin(std::numbers::pi / (2.0 * L))) * l1;
}

bool BoundReport::AllSatisfied() const { return NumViolations() == 0; }

std::size_t BoundReport::NumViolations() const {
  return static_cast<std::size_t>(
      std::count(satisfied.data().begin(), satisfied.data().end(), 0));
}

double BoundReport::WorstRatio() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < bound.size(); ++i) {
    if (bound.data()[i] > 0.0) {
      worst = std::max(worst, empirical.data()[i] / bound.data()[i]);
    }
  }
  return worst;
}

BoundReport PoormanBoundReport(const AudioBuffer& x, const StftConfig& cfg,
                               std::span<const double> window, int L,
                               PoormanBoundKind kind) {
  const KernelBank base = StftKernels(cfg, window, x.sample_rate_hz);
  const ComplexSpectrogram exact = Stft(x, cfg, window);
  const ComplexSpectrogram approx =
      StftFromKernels(x, PoormanKernels(base, L), cfg.hop);
  BoundReport report;
  const std::size_t frames = exact.real.rows();
  const std::size_t bins = exact.real.cols();
  report.bound = RealMatrix(frames, bins);
  report.empirical = RealMatrix(frames, bins);
  report.satisfied = Matrix<unsigned char>(frames, bins, 0);
  for (std::size_t m = 0; m < frames; ++m) {
    const double b = kind == PoormanBoundKind::kStated
                         ? PoormanBound(x.samples, window, cfg.hop, m, L)
                         : PoormanL1Bound(x.samples, window, cfg.hop, m, L);
    for (std::size_t k = 0; k < bins; ++k) {
      const double e = std::abs(exact.At(m, k) - approx.At(m, k));
      report.bound(m, k) = b;
      report.empirical(m, k) = e;
      report.satisfied(m, k) = e <= b * (1.0 + 1e-9) ? 1 : 0;
    }
  }
  return report;
}

Spectrogram L1EnergySpectrogram(const ComplexSpectrogram& spec) {
  Spectrogram out;
  out.values = RealMatrix(spec.real.rows(), spec.real.cols());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values.data()[i] =
        std::abs(spec.real.data()[i]) + std::abs(spec.imag.data()[i]);
  }
  out.channel_freqs = spec.bin_upper_freqs;
  return out;
}

RealMatrix L1EnergyError(const ComplexSpectrogram& spec) {
  RealMatrix out(spec.real.rows(), spec.real.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double re = spec.real.data()[i];
    const double im = spec.imag.data()[i];
    out.data()[i] = std::abs(re * re + im * im - std::abs(re) - std::abs(im));
  }
  return out;
}

KernelBank CropKernels(const KernelBank& bank, double f_min, double f_max) {
  if (!(f_min >= 0.0 && f_min < f_max)) {
    throw std::invalid_argument("cropping needs 0 <= f_min < f_max");
  }
  KernelBank out = bank;
  for (KernelRow& row : out.rows) {
    if (row.center_hz < f_min || row.center_hz > f_max) {
      std::fill(row.taps.begin(), row.taps.end(), 0.0);
    }
  }
  return out;
}

RealMatrix CropError(const ComplexSpectrogram& spec,
                     std::span<const double> center_freqs, double f_min,
                     double f_max) {
  if (center_freqs.size() != static_cast<std::size_t>(spec.NumBins())) {
    throw std::invalid_argument("one center frequency per bin required");
  }
  RealMatrix out(spec.real.rows(), spec.real.cols());
  for (int m = 0; m < spec.NumFrames(); ++m) {
    for (int k = 0; k < spec.NumBins(); ++k) {
      const double outside = (center_freqs[k] > f_max ? 1.0 : 0.0) +
                             (center_freqs[k] < f_min ? 1.0 : 0.0);
      out(m, k) = std::abs(spec.At(m, k)) * outside;
    }
  }
  return out;
}

KernelBank ApplyApprox(const KernelBank& bank, const ApproxSpec& spec) {
  return std::visit(
      Overloaded{
          [&](const Conventional&) { return bank; },
          [&](const Dilation& d) {
            return DilationKernels(bank, d.d, d.per_bin_cap);
          },
          [&](const FreqAdaptiveWindow& f) {
            return FdWindowKernels(bank, f.n_min, bank.sample_rate_hz / 2.0);
          },
          [&](const Poorman& p) { return PoormanKernels(bank, p.L); },
          [&](const L1Energy&) { return bank; },
          [&](const Cropping& c) { return CropKernels(bank, c.f_min, c.f_max); },
      },
      spec);
}

}  // namespace qasp
