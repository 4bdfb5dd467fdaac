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


// qasp: quantized approximate spectrograms under a simulated 16-bit FHE
// accumulator budget.
//
//   qasp spectrogram     clear vs simulated-FHE spectrograms and distances
//   qasp descriptors     descriptor CSV for both paths
//   qasp stattest        Mann-Whitney class-pair replication report
//   qasp gridsearch      bit-width ranking
//   qasp validate-bounds approximation bound and identity checks
//   qasp budget          Eq. (4) accumulator report, no execution
//
// Exit status: 0 success, 2 completed with skipped files, 1 failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qasp/approx.h"
#include "qasp/circuit.h"
#include "qasp/dataset.h"
#include "qasp/descriptors.h"
#include "qasp/eval.h"
#include "qasp/transform.h"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace qasp;

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitSkipped = 2;

struct Options {
  std::string transform = "stft";
  std::string approx = "conventional";
  std::string bits = "4,7,2,6";
  double calib_fraction = 0.10;
  std::uint64_t seed = 0;
  std::string out = "qasp_out";
  std::string synthetic;
  std::string data;
  int clips_per_class = 30;
  double clip_seconds = 1.0;
  int sample_rate = 16000;
  int n_fft = 1024;
  int hop = 256;
  int n_mels = 64;
  int n_mfcc = 13;
  int n_gammatone = 64;
  int threads = 1;
  double threshold = kSignificance;
  // subcommand-specific
  int export_limit = 4;
  std::string grid = "2-8";
  std::string objective = "pearson";
  int bound_clips = 8;
  bool descriptor_graph = false;
  bool graph_json = false;
};

BitWidthConfig ParseBits(const std::string& text) {
  BitWidthConfig b;
  char tail;
  if (std::sscanf(text.c_str(), "%d,%d,%d,%d%c", &b.input, &b.output, &b.weight,
                  &b.intermediate, &tail) != 4) {
    throw std::invalid_argument("--bits expects Bi,Bo,Bw,Bm, got '" + text + "'");
  }
  b.Validate();
  return b;
}

std::string BitsText(const BitWidthConfig& b) {
  return std::to_string(b.input) + ',' + std::to_string(b.output) + ',' +
         std::to_string(b.weight) + ',' + std::to_string(b.intermediate);
}

// "2-8" for {2..8}^4, or configs separated by ';'.
std::vector<BitWidthConfig> ParseGrid(const std::string& text) {
  int lo, hi;
  char tail;
  if (std::sscanf(text.c_str(), "%d-%d%c", &lo, &hi, &tail) == 2) {
    if (lo < 1 || hi > kMaxBits || lo > hi) {
      throw std::invalid_argument("--grid range must lie in 1-16");
    }
    return DefaultGrid(lo, hi);
  }
  std::vector<BitWidthConfig> grid;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ';');) {
    if (!item.empty()) grid.push_back(ParseBits(item));
  }
  if (grid.empty()) throw std::invalid_argument("--grid is empty");
  return grid;
}

TransformConfig MakeConfig(const Options& o) {
  TransformConfig c;
  c.sample_rate_hz = o.sample_rate;
  c.stft = StftConfig{o.n_fft, o.hop};
  c.mel.n_mels = o.n_mels;
  c.mel.f_high = o.sample_rate / 2.0;
  c.n_mfcc = o.n_mfcc;
  c.gammatone.n_filters = o.n_gammatone;
  c.gammatone.f_high = std::min(c.gammatone.f_high, 0.45 * o.sample_rate);
  c.Validate();
  return c;
}

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void WriteText(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string MatrixCsv(const RealMatrix& m) {
  std::string s;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) s += ',';
      s += Num(m(r, c));
    }
    s += '\n';
  }
  return s;
}

std::string SafeName(std::string id) {
  for (char& c : id) {
    if (c == '/' || c == '\\' || c == ' ') c = '_';
  }
  return id;
}

struct Data {
  std::vector<LabeledClip> calibration;
  std::vector<LabeledClip> evaluation;
  std::vector<SkippedFile> skipped;
};

Data LoadData(const Options& o) {
  if (!(o.clip_seconds > 0.0)) throw std::invalid_argument("--clip-seconds must be > 0");
  Data d;
  Split split;
  std::map<std::string, LabeledClip> by_id;
  if (!o.data.empty()) {
    DatasetManifest m = Ingest(o.data, o.sample_rate);
    d.skipped = m.skipped;
    split = StratifiedSplit(m.entries, o.calib_fraction, o.seed);
    const auto samples =
        static_cast<std::size_t>(std::llround(o.clip_seconds * o.sample_rate));
    d.calibration = LoadClips(split.calibration, samples, d.skipped, m.root);
    d.evaluation = LoadClips(split.evaluation, samples, d.skipped, m.root);
  } else {
    const SyntheticKind kind =
        ParseSyntheticKind(o.synthetic.empty() ? "tones" : o.synthetic);
    std::vector<DatasetEntry> entries;
    for (LabeledClip& c : SyntheticDataset(kind, o.clips_per_class, o.clip_seconds,
                                           o.sample_rate, o.seed)) {
      entries.push_back({c.id, c.label, ""});
      by_id.emplace(c.id, std::move(c));
    }
    split = StratifiedSplit(entries, o.calib_fraction, o.seed);
    for (const auto& e : split.calibration) d.calibration.push_back(by_id.at(e.path));
    for (const auto& e : split.evaluation) d.evaluation.push_back(by_id.at(e.path));
  }
  for (const std::string& w : split.warnings) std::cerr << "warning: " << w << '\n';
  if (d.calibration.empty()) throw std::runtime_error("no usable calibration clips");
  return d;
}

std::vector<AudioBuffer> Audio(const std::vector<LabeledClip>& clips) {
  std::vector<AudioBuffer> out;
  for (const LabeledClip& c : clips) out.push_back(c.audio);
  return out;
}

void WriteSkipReport(const fs::path& out, const Data& d) {
  std::string s = "path,reason\n";
  for (const SkippedFile& f : d.skipped) {
    std::string reason = f.reason;
    for (char& c : reason) {
      if (c == ',' || c == '\n') c = ';';
    }
    s += f.path + ',' + reason + '\n';
  }
  WriteText(out / "skipped.csv", s);
  for (const SkippedFile& f : d.skipped) {
    std::cerr << "skipped " << f.path << ": " << f.reason << '\n';
  }
}

json RunInfo(const Options& o, const Data& d) {
  json j;
  j["transform"] = o.transform;
  j["approx"] = ApproxToString(ParseApprox(o.approx));
  j["bits"] = o.bits;
  j["n_fft"] = o.n_fft;
  j["hop"] = o.hop;
  j["sample_rate_hz"] = o.sample_rate;
  j["clip_seconds"] = o.clip_seconds;
  j["seed"] = o.seed;
  j["calibration_clips"] = d.calibration.size();
  j["evaluation_clips"] = d.evaluation.size();
  j["skipped"] = d.skipped.size();
  return j;
}

json BudgetJson(const AccumulatorReport& r) {
  json j;
  j["ok"] = r.ok();
  j["max_worst_case_bits"] = r.MaxWorstCaseBits();
  json nodes = json::array();
  for (const NodeBudget& n : r.nodes) {
    json e;
    e["node"] = n.node;
    e["name"] = n.name;
    e["kind"] = n.kind;
    e["worst_case_bits"] = n.worst_case_bits;
    if (n.taps > 0) e["taps"] = n.taps;
    nodes.push_back(e);
  }
  j["nodes"] = nodes;
  return j;
}

int RunSpectrogram(const Options& o) {
  const Data d = LoadData(o);
  const TransformConfig config = MakeConfig(o);
  const PipelineSpec spec{ParseTransform(o.transform), ParseApprox(o.approx),
                          ParseBits(o.bits), config};
  const CircuitGraph graph = BuildPipeline(spec, Audio(d.calibration));
  const fs::path out = o.out;
  std::string csv = "file_id,class,distance\n";
  std::map<std::string, std::pair<double, int>> per_class;
  double total = 0.0;
  for (std::size_t i = 0; i < d.evaluation.size(); ++i) {
    const LabeledClip& c = d.evaluation[i];
    const Spectrogram clear = ClearTransform(c.audio, spec.transform, config);
    const Spectrogram fhe = RunPipeline(graph, c.audio);
    const double dist = NormalizedEuclidean(clear.values, fhe.values);
    csv += c.id + ',' + c.label + ',' + Num(dist) + '\n';
    total += dist;
    per_class[c.label].first += dist;
    ++per_class[c.label].second;
    if (static_cast<int>(i) < o.export_limit) {
      const std::string base = "spectrograms/" + SafeName(c.id);
      WriteText(out / (base + ".clear.csv"), MatrixCsv(clear.values));
      WriteText(out / (base + ".fhe.csv"), MatrixCsv(fhe.values));
      json axes;
      axes["file_id"] = c.id;
      axes["transform"] = o.transform;
      axes["rows"] = "frame";
      axes["cols"] = o.transform == "mfcc" ? "coefficient" : "channel";
      axes["frames"] = clear.NumFrames();
      axes["channels"] = clear.NumChannels();
      json times = json::array();
      for (int m = 0; m < clear.NumFrames(); ++m) {
        times.push_back(static_cast<double>(m) * o.hop / o.sample_rate);
      }
      axes["frame_start_seconds"] = times;
      if (!clear.channel_freqs.empty()) axes["channel_freqs_hz"] = clear.channel_freqs;
      WriteText(out / (base + ".json"), axes.dump(2) + "\n");
    }
  }
  WriteText(out / "distances.csv", csv);
  json summary = RunInfo(o, d);
  summary["mean_distance"] =
      d.evaluation.empty() ? 0.0 : total / static_cast<double>(d.evaluation.size());
  json classes;
  for (const auto& [label, acc] : per_class) classes[label] = acc.first / acc.second;
  summary["mean_distance_per_class"] = classes;
  summary["budget"] = BudgetJson(CheckBudget(graph));
  WriteText(out / "summary.json", summary.dump(2) + "\n");
  WriteText(out / "circuit.json", CircuitToJson(graph, false));
  WriteSkipReport(out, d);
  std::cout << "mean normalized distance " << Num(summary["mean_distance"].get<double>())
            << " over " << d.evaluation.size() << " clips\n";
  return d.skipped.empty() ? kExitOk : kExitSkipped;
}

struct DescriptorRun {
  Data data;
  DescriptorCircuit circuit;
  std::vector<std::string> labels;
  std::vector<DescriptorValues> clear;
  std::vector<DescriptorValues> fhe;
};

DescriptorRun ComputeDescriptors(const Options& o) {
  DescriptorRun run;
  run.data = LoadData(o);
  const TransformConfig config = MakeConfig(o);
  run.circuit = BuildDescriptorCircuit(ParseApprox(o.approx), ParseBits(o.bits),
                                       config, Audio(run.data.calibration));
  for (const LabeledClip& c : run.data.evaluation) {
    run.labels.push_back(c.label);
    run.clear.push_back(ClearDescriptorVector(c.audio, config, run.circuit.norms));
    run.fhe.push_back(RunDescriptorCircuit(run.circuit, c.audio));
  }
  return run;
}

void WriteDescriptorFiles(const Options& o, const DescriptorRun& run) {
  const fs::path out = o.out;
  std::string csv = DescriptorCsvHeader() + '\n';
  for (std::size_t i = 0; i < run.labels.size(); ++i) {
    const LabeledClip& c = run.data.evaluation[i];
    csv += DescriptorCsvRow(c.id, c.label, run.clear[i], "clear") + '\n';
    csv += DescriptorCsvRow(c.id, c.label, run.fhe[i], "fhe") + '\n';
  }
  WriteText(out / "descriptors.csv", csv);
  json norms;
  for (int i = 0; i < kNumDescriptors; ++i) {
    norms[DescriptorNames()[i]] = {{"center", run.circuit.norms.center[i]},
                                   {"scale", run.circuit.norms.scale[i]}};
  }
  WriteText(out / "normalization.json", norms.dump(2) + "\n");
}

int RunDescriptors(const Options& o) {
  const DescriptorRun run = ComputeDescriptors(o);
  WriteDescriptorFiles(o, run);
  json summary = RunInfo(o, run.data);
  json rs;
  for (int i = 0; i < kNumDescriptors; ++i) {
    std::vector<double> a, b;
    for (std::size_t n = 0; n < run.clear.size(); ++n) {
      a.push_back(run.clear[n][i]);
      b.push_back(run.fhe[n][i]);
    }
    try {
      rs[DescriptorNames()[i]] = Pearson(a, b);
    } catch (const std::exception&) {
      rs[DescriptorNames()[i]] = nullptr;
    }
  }
  summary["pearson"] = rs;
  summary["budget"] = BudgetJson(CheckBudget(run.circuit.graph));
  WriteText(fs::path(o.out) / "summary.json", summary.dump(2) + "\n");
  WriteSkipReport(o.out, run.data);
  std::cout << "wrote descriptors for " << run.labels.size() << " clips\n";
  return run.data.skipped.empty() ? kExitOk : kExitSkipped;
}

int RunStatTest(const Options& o) {
  const DescriptorRun run = ComputeDescriptors(o);
  WriteDescriptorFiles(o, run);
  const std::vector<PairTestResult> pairs =
      RunPairTests(run.labels, run.clear, run.fhe, o.threshold);
  const DiscoveryErrorReport rep = DiscoveryErrors(pairs);
  const fs::path out = o.out;
  WriteText(out / "pairs.csv", PairTestsCsv(pairs));
  WriteText(out / "pvalue_scatter.csv", PValueScatterCsv(pairs));
  WriteText(out / "discovery.json", DiscoveryReportJson(rep, o.threshold));
  WriteSkipReport(out, run.data);
  std::cout << "discovery error " << rep.TableCell() << "  TP=" << rep.tp
            << " FP=" << rep.fp << " TN=" << rep.tn << " FN=" << rep.fn << '\n';
  return run.data.skipped.empty() ? kExitOk : kExitSkipped;
}

int RunGridSearch(const Options& o) {
  const Data d = LoadData(o);
  GridSearchRequest q;
  q.space = ParseGrid(o.grid);
  if (o.objective == "pearson") {
    q.objective = Objective::kDescriptorPearson;
  } else if (o.objective == "distance") {
    q.objective = Objective::kIntrinsicDistance;
  } else {
    throw std::invalid_argument("--objective must be pearson or distance");
  }
  q.transform = ParseTransform(o.transform);
  q.approx = ParseApprox(o.approx);
  q.config = MakeConfig(o);
  q.threads = o.threads;
  const std::vector<GridSearchResult> ranked =
      GridSearch(q, Audio(d.calibration), Audio(d.evaluation));
  const fs::path out = o.out;
  WriteText(out / "gridsearch.json", GridSearchJson(ranked, q.objective));
  WriteText(out / "gridsearch.csv", GridSearchCsv(ranked, q.objective));
  WriteSkipReport(out, d);
  int shown = 0;
  for (const GridSearchResult& r : ranked) {
    if (!r.feasible || shown == 5) break;
    std::cout << ++shown << ". bits " << BitsText(r.config) << "  "
              << (q.objective == Objective::kDescriptorPearson
                      ? "mean r " + Num(r.mean_r)
                      : "mean distance " + Num(r.mean_distance))
              << '\n';
  }
  if (shown == 0) std::cout << "no feasible configuration\n";
  return d.skipped.empty() ? kExitOk : kExitSkipped;
}

int RunValidateBounds(const Options& o) {
  const Data d = LoadData(o);
  const TransformConfig config = MakeConfig(o);
  const StftConfig& cfg = config.stft;
  const std::vector<double> window = HannWindow(cfg.window_length);
  std::vector<const LabeledClip*> clips;
  for (const auto* side : {&d.calibration, &d.evaluation}) {
    for (const LabeledClip& c : *side) {
      if (static_cast<int>(clips.size()) < o.bound_clips) clips.push_back(&c);
    }
  }
  std::string csv = "check,parameter,value,limit,pass\n";
  json checks = json::array();
  auto record = [&](const std::string& check, const std::string& param,
                    double value, double limit, bool pass) {
    csv += check + ',' + param + ',' + Num(value) + ',' + Num(limit) + ',' +
           (pass ? "1" : "0") + '\n';
    checks.push_back({{"check", check}, {"parameter", param}, {"value", value},
                      {"limit", limit}, {"pass", pass}});
  };
  for (int L : {2, 4, 6, 8, 16}) {
    for (auto kind : {PoormanBoundKind::kStated, PoormanBoundKind::kTriangle}) {
      double worst = 0.0;
      std::size_t violations = 0;
      for (const LabeledClip* c : clips) {
        const BoundReport r = PoormanBoundReport(c->audio, cfg, window, L, kind);
        worst = std::max(worst, r.WorstRatio());
        violations += r.NumViolations();
      }
      record(kind == PoormanBoundKind::kStated ? "poorman_l2_bound" : "poorman_l1_bound",
             "L=" + std::to_string(L), worst, 1.0 + 1e-9, violations == 0);
    }
  }
  for (int dil : {2, 4, 8}) {
    if (cfg.window_length % dil != 0) continue;
    double worst = 0.0;
    for (const LabeledClip* c : clips) {
      worst = std::max(worst, DilationAliasingDeviation(c->audio, cfg, window, dil));
    }
    record("dilation_aliasing_identity", "d=" + std::to_string(dil), worst, 1e-9,
           worst < 1e-9);
  }
  for (int dil : {2, 4}) {
    double worst = 0.0;
    for (const LabeledClip* c : clips) {
      const DilationErrorReport r = DilationError(c->audio, cfg, window, dil, true);
      for (std::size_t i = 0; i < r.direct.size(); ++i) {
        worst = std::max(worst, std::abs(r.direct.data()[i] - r.masked_sum.data()[i]));
      }
    }
    record("dilation_error_decomposition", "d=" + std::to_string(dil), worst, 1e-9,
           worst < 1e-9);
  }
  const fs::path out = o.out;
  WriteText(out / "bounds.csv", csv);
  json j;
  j["clips"] = clips.size();
  j["n_fft"] = cfg.window_length;
  j["hop"] = cfg.hop;
  j["checks"] = checks;
  WriteText(out / "bounds.json", j.dump(2) + "\n");
  WriteSkipReport(out, d);
  std::cout << csv;
  return d.skipped.empty() ? kExitOk : kExitSkipped;
}

int RunBudget(const Options& o) {
  const Data d = LoadData(o);
  const TransformConfig config = MakeConfig(o);
  const BitWidthConfig bits = ParseBits(o.bits);
  AccumulatorReport report;
  std::string graph_json;
  try {
    if (o.descriptor_graph) {
      const DescriptorCircuit c = BuildDescriptorCircuit(
          ParseApprox(o.approx), bits, config, Audio(d.calibration));
      report = CheckBudget(c.graph);
      graph_json = CircuitToJson(c.graph, false);
    } else {
      const CircuitGraph g = BuildPipeline(
          {ParseTransform(o.transform), ParseApprox(o.approx), bits, config},
          Audio(d.calibration));
      report = CheckBudget(g);
      graph_json = CircuitToJson(g, false);
    }
  } catch (const BudgetViolation& e) {
    report = e.report();
  }
  const fs::path out = o.out;
  json j;
  j["graph"] = o.descriptor_graph ? "descriptors" : o.transform;
  j["approx"] = ApproxToString(ParseApprox(o.approx));
  j["bits"] = o.bits;
  j["budget_bits"] = kMaxBits;
  j["report"] = BudgetJson(report);
  WriteText(out / "budget.json", j.dump(2) + "\n");
  if (o.graph_json && !graph_json.empty()) WriteText(out / "circuit.json", graph_json);
  WriteSkipReport(out, d);
  std::cout << report.ToString()
            << (report.ok() ? "within" : "exceeds") << " the " << kMaxBits
            << "-bit budget (max " << report.MaxWorstCaseBits() << " bits)\n";
  return d.skipped.empty() ? kExitOk : kExitSkipped;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantized approximate time-frequency transforms under a "
               "simulated FHE accumulator budget"};
  app.set_config("--config", "", "INI/TOML file; command-line flags win");
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--transform", o.transform, "stft, mel, mfcc or gammatone")
      ->check(CLI::IsMember({"stft", "mel", "mfcc", "gammatone"}))
      ->capture_default_str();
  app.add_option("--approx", o.approx,
                 "conventional, dilation:d[:nocap], dilation:max, fdwindow:Nmin, "
                 "poorman:L, l1, crop:fmin:fmax")
      ->capture_default_str();
  // Config files may hand the list over already split.
  app.add_option("--bits", o.bits, "Bi,Bo,Bw,Bm")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::Join)
      ->capture_default_str();
  app.add_option("--calib-fraction", o.calib_fraction, "calibration share per class")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app.add_option("--seed", o.seed, "split and synthetic-data seed")->capture_default_str();
  app.add_option("--out", o.out, "output directory")->capture_default_str();
  app.add_option("--synthetic", o.synthetic,
                 "tones, noise or chirps (default tones when --data is absent)")
      ->check(CLI::IsMember({"tones", "noise", "chirps"}));
  app.add_option("--data", o.data, "dataset root: root/class[/subclass]/*.wav")
      ->check(CLI::ExistingDirectory);
  app.add_option("--clips-per-class", o.clips_per_class, "synthetic clips per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--clip-seconds", o.clip_seconds, "clip length; longer files are truncated")
      ->capture_default_str();
  app.add_option("--sample-rate", o.sample_rate, "expected sample rate (Hz)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--n-fft", o.n_fft, "window length N")->capture_default_str();
  app.add_option("--hop", o.hop, "hop h")->capture_default_str();
  app.add_option("--n-mels", o.n_mels)->capture_default_str();
  app.add_option("--n-mfcc", o.n_mfcc)->capture_default_str();
  app.add_option("--n-gammatone", o.n_gammatone)->capture_default_str();
  app.add_option("--threads", o.threads)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--threshold", o.threshold, "significance level")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  auto* spectrogram = app.add_subcommand("spectrogram", "clear and simulated-FHE spectrograms");
  spectrogram->add_option("--export-limit", o.export_limit,
                          "number of clips exported as CSV matrices")
      ->capture_default_str();
  auto* descriptors = app.add_subcommand("descriptors", "descriptor CSVs for both paths");
  auto* stattest = app.add_subcommand("stattest", "class-pair Mann-Whitney replication");
  auto* gridsearch = app.add_subcommand("gridsearch", "bit-width grid search");
  gridsearch->add_option("--grid", o.grid, "lo-hi for {lo..hi}^4, or Bi,Bo,Bw,Bm;...")
      ->capture_default_str();
  gridsearch->add_option("--objective", o.objective, "pearson or distance")
      ->check(CLI::IsMember({"pearson", "distance"}))
      ->capture_default_str();
  auto* bounds = app.add_subcommand("validate-bounds", "approximation bound checks");
  bounds->add_option("--bound-clips", o.bound_clips, "clips checked")
      ->capture_default_str();
  auto* budget = app.add_subcommand("budget", "accumulator report without execution");
  budget->add_flag("--descriptor-graph", o.descriptor_graph,
                   "report the descriptor graph instead of --transform");
  budget->add_flag("--graph-json", o.graph_json, "also write circuit.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitFailed;
  }
  try {
    if (*spectrogram) return RunSpectrogram(o);
    if (*descriptors) return RunDescriptors(o);
    if (*stattest) return RunStatTest(o);
    if (*gridsearch) return RunGridSearch(o);
    if (*bounds) return RunValidateBounds(o);
    if (*budget) return RunBudget(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailed;
  }
  return kExitFailed;
}
