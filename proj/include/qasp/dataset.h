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


// Audio datasets: mono WAV I/O, directory-per-class ingestion with a skip
// report, seeded stratified calibration/evaluation splits, and synthetic
// two-class corpora for runs without recordings.

#ifndef QASP_DATASET_H_
#define QASP_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "qasp/signal.h"

namespace qasp {

class WavError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class WavEncoding { kPcm16, kFloat32 };

// PCM16 samples are divided by 2^15. Throws WavError for stereo or any other
// encoding.
AudioBuffer ReadWav(const std::filesystem::path& path);
int ReadWavSampleRate(const std::filesystem::path& path);
void WriteWav(const std::filesystem::path& path, const AudioBuffer& audio,
              WavEncoding encoding = WavEncoding::kPcm16);

struct DatasetEntry {
  std::string path;
  std::string label;
  std::string subclass;  // empty for root/label/file.wav
};

struct SkippedFile {
  std::string path;
  std::string reason;
};

struct DatasetManifest {
  std::string root;
  int sample_rate_hz = 16000;
  std::vector<DatasetEntry> entries;  // sorted by path
  std::vector<SkippedFile> skipped;
};

class EmptyDataset : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// root/label/*.wav and root/label/subclass/*.wav. Unreadable files and
// sample-rate mismatches land in `skipped`; no usable file throws
// EmptyDataset.
DatasetManifest Ingest(const std::filesystem::path& root, int sample_rate_hz);

struct Split {
  std::vector<DatasetEntry> calibration;
  std::vector<DatasetEntry> evaluation;
  std::vector<std::string> warnings;
};

// Per class, round(fraction * n) files (at least 1, and leaving at least 1
// for evaluation when n >= 2) go to calibration. Both sides keep input order.
Split StratifiedSplit(const std::vector<DatasetEntry>& entries, double fraction,
                      std::uint64_t seed);

struct LabeledClip {
  std::string id;
  std::string label;
  AudioBuffer audio;
};

// Loads root/path for each entry and truncates to `clip_samples`; shorter or
// unreadable files are appended to `skipped`.
std::vector<LabeledClip> LoadClips(const std::vector<DatasetEntry>& entries,
                                   std::size_t clip_samples,
                                   std::vector<SkippedFile>& skipped,
                                   const std::filesystem::path& root);

enum class SyntheticKind { kTones, kNoise, kChirps };
SyntheticKind ParseSyntheticKind(const std::string& text);

// Two classes per kind:
//   tones   amp1.0 / amp1.5: tones of that peak amplitude with slow
//           amplitude modulation and light noise
//   noise   white / lowpass
//   chirps  up / down
// Clips alternate between the classes and are fully determined by `seed`.
std::vector<LabeledClip> SyntheticDataset(SyntheticKind kind,
                                          int clips_per_class, double seconds,
                                          int sample_rate_hz,
                                          std::uint64_t seed);

}  // namespace qasp

#endif  // QASP_DATASET_H_
