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


#include "qasp/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <random>

namespace qasp {

namespace fs = std::filesystem;

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t U32(const char* p) {
  const auto* b = reinterpret_cast<const unsigned char*>(p);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t{b[3]} << 24);
}
std::uint16_t U16(const char* p) {
  const auto* b = reinterpret_cast<const unsigned char*>(p);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

struct WavInfo {
  int sample_rate_hz = 0;
  WavEncoding encoding = WavEncoding::kPcm16;
  std::streamoff data_offset = 0;
  std::uint32_t data_bytes = 0;
};

WavInfo ParseHeader(std::ifstream& in, const std::string& name) {
  char riff[12];
  if (!in.read(riff, 12) || std::memcmp(riff, "RIFF", 4) != 0 ||
      std::memcmp(riff + 8, "WAVE", 4) != 0) {
    throw WavError(name + ": not a RIFF/WAVE file");
  }
  WavInfo info;
  bool have_fmt = false;
  char head[8];
  while (in.read(head, 8)) {
    const std::uint32_t size = U32(head + 4);
    if (std::memcmp(head, "fmt ", 4) == 0) {
      if (size < 16) throw WavError(name + ": short fmt chunk");
      std::vector<char> fmt(size);
      if (!in.read(fmt.data(), size)) throw WavError(name + ": truncated fmt chunk");
      std::uint16_t format = U16(fmt.data());
      const std::uint16_t channels = U16(fmt.data() + 2);
      const std::uint16_t bits = U16(fmt.data() + 14);
      if (format == kFormatExtensible && size >= 26) format = U16(fmt.data() + 24);
      if (channels != 1) {
        throw WavError(name + ": " + std::to_string(channels) +
                       " channels; only mono is supported");
      }
      if (format == kFormatPcm && bits == 16) {
        info.encoding = WavEncoding::kPcm16;
      } else if (format == kFormatFloat && bits == 32) {
        info.encoding = WavEncoding::kFloat32;
      } else {
        throw WavError(name + ": unsupported encoding (format " +
                       std::to_string(format) + ", " + std::to_string(bits) +
                       " bits)");
      }
      info.sample_rate_hz = static_cast<int>(U32(fmt.data() + 4));
      have_fmt = true;
      if (size % 2) in.ignore(1);
    } else if (std::memcmp(head, "data", 4) == 0) {
      if (!have_fmt) throw WavError(name + ": data chunk before fmt chunk");
      info.data_offset = in.tellg();
      info.data_bytes = size;
      return info;
    } else {
      in.ignore(size + (size % 2));
    }
  }
  throw WavError(name + ": no data chunk");
}

void PutU32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                     static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
  out.write(b, 4);
}
void PutU16(std::ofstream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

}  // namespace

AudioBuffer ReadWav(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError(path.string() + ": cannot open");
  const WavInfo info = ParseHeader(in, path.string());
  const std::size_t width = 2 + 2 * (info.encoding == WavEncoding::kFloat32);
  std::vector<char> raw(info.data_bytes - info.data_bytes % width);
  in.seekg(info.data_offset);
  if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size()))) {
    throw WavError(path.string() + ": truncated data chunk");
  }
  AudioBuffer audio;
  audio.sample_rate_hz = info.sample_rate_hz;
  audio.samples.resize(raw.size() / width);
  for (std::size_t n = 0; n < audio.samples.size(); ++n) {
    const char* p = raw.data() + n * width;
    if (info.encoding == WavEncoding::kPcm16) {
      audio.samples[n] = static_cast<std::int16_t>(U16(p)) / 32768.0;
    } else {
      const std::uint32_t bits = U32(p);
      float f;
      std::memcpy(&f, &bits, 4);
      if (!std::isfinite(f)) throw WavError(path.string() + ": non-finite sample");
      audio.samples[n] = f;
    }
  }
  return audio;
}

int ReadWavSampleRate(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError(path.string() + ": cannot open");
  return ParseHeader(in, path.string()).sample_rate_hz;
}

void WriteWav(const fs::path& path, const AudioBuffer& audio,
              WavEncoding encoding) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WavError(path.string() + ": cannot create");
  const bool pcm = encoding == WavEncoding::kPcm16;
  const std::uint16_t width = pcm ? 2 : 4;
  const auto data = static_cast<std::uint32_t>(audio.samples.size() * width);
  out.write("RIFF", 4);
  PutU32(out, 36 + data);
  out.write("WAVEfmt ", 8);
  PutU32(out, 16);
  PutU16(out, pcm ? kFormatPcm : kFormatFloat);
  PutU16(out, 1);
  PutU32(out, static_cast<std::uint32_t>(audio.sample_rate_hz));
  PutU32(out, static_cast<std::uint32_t>(audio.sample_rate_hz) * width);
  PutU16(out, width);
  PutU16(out, static_cast<std::uint16_t>(8 * width));
  out.write("data", 4);
  PutU32(out, data);
  for (double v : audio.samples) {
    if (pcm) {
      const double s = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
      PutU16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(s)));
    } else {
      const float f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      PutU32(out, bits);
    }
  }
  if (!out) throw WavError(path.string() + ": write failed");
}

namespace {

bool IsWav(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".wav";
}

std::vector<fs::path> SortedChildren(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

DatasetManifest Ingest(const fs::path& root, int sample_rate_hz) {
  if (!fs::is_directory(root)) {
    throw EmptyDataset(root.string() + " is not a directory");
  }
  DatasetManifest m;
  m.root = root.string();
  m.sample_rate_hz = sample_rate_hz;
  auto consider = [&](const fs::path& file, const std::string& label,
                      const std::string& sub) {
    const std::string rel = fs::relative(file, root).generic_string();
    try {
      const int rate = ReadWavSampleRate(file);
      if (rate != sample_rate_hz) {
        m.skipped.push_back({rel, "sample rate " + std::to_string(rate) +
                                      " Hz, expected " +
                                      std::to_string(sample_rate_hz)});
        return;
      }
      m.entries.push_back({rel, label, sub});
    } catch (const WavError& e) {
      m.skipped.push_back({rel, e.what()});
    }
  };
  for (const fs::path& cls : SortedChildren(root)) {
    if (!fs::is_directory(cls)) continue;
    const std::string label = cls.filename().string();
    for (const fs::path& p : SortedChildren(cls)) {
      if (fs::is_directory(p)) {
        for (const fs::path& f : SortedChildren(p)) {
          if (fs::is_regular_file(f) && IsWav(f)) {
            consider(f, label, p.filename().string());
          }
        }
      } else if (IsWav(p)) {
        consider(p, label, "");
      }
    }
  }
  if (m.entries.empty()) {
    throw EmptyDataset("no usable WAV files under " + root.string());
  }
  return m;
}

Split StratifiedSplit(const std::vector<DatasetEntry>& entries, double fraction,
                      std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("calibration fraction must be in (0, 1)");
  }
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    by_class[entries[i].label].push_back(i);
  }
  Split split;
  std::vector<bool> calib(entries.size(), false);
  std::mt19937_64 rng(seed);
  for (auto& [label, idx] : by_class) {
    const std::size_t n = idx.size();
    std::size_t k = static_cast<std::size_t>(std::llround(fraction * n));
    k = std::max<std::size_t>(k, 1);
    if (n >= 2) k = std::min(k, n - 1);
    if (n == 1) {
      split.warnings.push_back("class '" + label +
                               "' has a single file; used for calibration only");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t j = 0; j < k; ++j) calib[idx[j]] = true;
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    (calib[i] ? split.calibration : split.evaluation).push_back(entries[i]);
  }
  return split;
}

std::vector<LabeledClip> LoadClips(const std::vector<DatasetEntry>& entries,
                                   std::size_t clip_samples,
                                   std::vector<SkippedFile>& skipped,
                                   const fs::path& root) {
  std::vector<LabeledClip> clips;
  for (const DatasetEntry& e : entries) {
    try {
      AudioBuffer a = ReadWav(root / e.path);
      if (a.samples.size() < clip_samples) {
        skipped.push_back({e.path, "shorter than the clip length (" +
                                       std::to_string(a.samples.size()) + " < " +
                                       std::to_string(clip_samples) + " samples)"});
        continue;
      }
      a.samples.resize(clip_samples);
      clips.push_back({e.path, e.label, std::move(a)});
    } catch (const WavError& e2) {
      skipped.push_back({e.path, e2.what()});
    }
  }
  return clips;
}

SyntheticKind ParseSyntheticKind(const std::string& text) {
  if (text == "tones") return SyntheticKind::kTones;
  if (text == "noise") return SyntheticKind::kNoise;
  if (text == "chirps") return SyntheticKind::kChirps;
  throw std::invalid_argument("unknown synthetic kind '" + text +
                              "' (tones, noise, chirps)");
}

std::vector<LabeledClip> SyntheticDataset(SyntheticKind kind,
                                          int clips_per_class, double seconds,
                                          int sample_rate_hz,
                                          std::uint64_t seed) {
  if (clips_per_class < 1) throw std::invalid_argument("clips_per_class must be >= 1");
  if (!(seconds > 0.0)) throw std::invalid_argument("clip length must be > 0");
  if (sample_rate_hz <= 0) throw std::invalid_argument("sample rate must be > 0");
  const auto length =
      static_cast<std::size_t>(std::llround(seconds * sample_rate_hz));
  const double fs = sample_rate_hz;
  const double two_pi = 2.0 * std::numbers::pi;
  const char* names[3][2] = {{"amp1.0", "amp1.5"},
                             {"white", "lowpass"},
                             {"up", "down"}};
  const int k = static_cast<int>(kind);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g;
  std::vector<LabeledClip> out;
  for (int i = 0; i < 2 * clips_per_class; ++i) {
    const int cls = i % 2;
    LabeledClip clip;
    clip.label = names[k][cls];
    char id[64];
    std::snprintf(id, sizeof(id), "%s/%04d", clip.label.c_str(), i / 2);
    clip.id = id;
    clip.audio.sample_rate_hz = sample_rate_hz;
    std::vector<double>& x = clip.audio.samples;
    x.resize(length);
    switch (kind) {
      case SyntheticKind::kTones: {
        const double amp = cls == 0 ? 1.0 : 1.5;
        const double hz = 200.0 + 3800.0 * u(rng);
        const double depth = 0.3 * u(rng), rate = 1.0 + 3.0 * u(rng);
        const double phase = two_pi * u(rng);
        for (std::size_t n = 0; n < length; ++n) {
          const double t = n / fs;
          const double env = 1.0 - depth * 0.5 * (1.0 - std::cos(two_pi * rate * t));
          x[n] = amp * env * std::sin(two_pi * hz * t + phase) + 0.02 * g(rng);
        }
        break;
      }
      case SyntheticKind::kNoise: {
        const double sigma = 0.1 + 0.2 * u(rng);
        const double a = 0.9 + 0.07 * u(rng);
        // A one-pole lowpass of unit-variance white noise has variance
        // (1 - a) / (1 + a).
        const double gain = cls == 0 ? 1.0 : std::sqrt((1.0 + a) / (1.0 - a));
        double y = 0.0;
        for (std::size_t n = 0; n < length; ++n) {
          const double w = g(rng);
          y = a * y + (1.0 - a) * w;
          x[n] = sigma * (cls == 0 ? w : gain * y);
        }
        break;
      }
      case SyntheticKind::kChirps: {
        double f0 = 200.0 + 800.0 * u(rng), f1 = 2000.0 + 4000.0 * u(rng);
        if (cls == 1) std::swap(f0, f1);
        const double amp = 0.5 + 0.4 * u(rng);
        const double dur = length / fs;
        for (std::size_t n = 0; n < length; ++n) {
          const double t = n / fs;
          x[n] = amp * std::sin(two_pi * (f0 * t + (f1 - f0) * t * t / (2.0 * dur))) +
                 0.02 * g(rng);
        }
        break;
      }
    }
    out.push_back(std::move(clip));
  }
  return out;
}

}  // namespace qasp
