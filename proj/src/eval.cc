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


#include "qasp/eval.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "qasp/circuit.h"

namespace qasp {

double NormalizedEuclidean(const RealMatrix& a, const RealMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("spectrogram shapes differ");
  }
  double na = 0.0, nb = 0.0;
  for (double v : a.data()) na += v * v;
  for (double v : b.data()) nb += v * v;
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (na == 0.0 || nb == 0.0) return (na == 0.0 && nb == 0.0) ? 0.0 : 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] / na - b.data()[i] / nb;
    sum += d * d;
  }
  return std::sqrt(sum);
}

namespace {

struct Ranks {
  double rank_sum_a = 0.0;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
};

Ranks RankPooled(std::span<const double> a, std::span<const double> b) {
  std::vector<std::pair<double, bool>> pooled;
  for (double v : a) pooled.emplace_back(v, true);
  for (double v : b) pooled.emplace_back(v, false);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  Ranks r;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
    const double t = static_cast<double>(j - i);
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (pooled[k].second) r.rank_sum_a += mid;
    }
    r.tie_term += t * t * t - t;
    i = j;
  }
  return r;
}

double UStatistic(std::span<const double> a, const Ranks& r) {
  const double n1 = static_cast<double>(a.size());
  return r.rank_sum_a - n1 * (n1 + 1.0) / 2.0;
}

void RequireNonEmpty(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("Mann-Whitney needs nonempty samples");
  }
}

}  // namespace

double MannWhitneyExact(std::span<const double> a, std::span<const double> b) {
  RequireNonEmpty(a, b);
  const Ranks r = RankPooled(a, b);
  if (r.tie_term != 0.0) throw std::invalid_argument("exact test needs no ties");
  const int n1 = static_cast<int>(a.size()), n2 = static_cast<int>(b.size());
  const int u = static_cast<int>(std::lround(UStatistic(a, r)));
  // count[i][j][u]: arrangements of i a's and j b's with statistic u.
  const int max_u = n1 * n2;
  std::vector<std::vector<std::vector<double>>> count(
      n1 + 1, std::vector<std::vector<double>>(n2 + 1,
                                               std::vector<double>(max_u + 1)));
  for (int i = 0; i <= n1; ++i) {
    for (int j = 0; j <= n2; ++j) {
      if (i == 0 || j == 0) {
        count[i][j][0] = 1.0;
        continue;
      }
      // Largest element is an a (beats all j b's) or a b.
      for (int v = 0; v <= i * j; ++v) {
        double c = count[i][j - 1][v];
        if (v >= j) c += count[i - 1][j][v - j];
        count[i][j][v] = c;
      }
    }
  }
  double total = 0.0, lower = 0.0, upper = 0.0;
  for (int v = 0; v <= max_u; ++v) {
    const double c = count[n1][n2][v];
    total += c;
    if (v <= u) lower += c;
    if (v >= u) upper += c;
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / total);
}

double MannWhitneyNormal(std::span<const double> a, std::span<const double> b) {
  RequireNonEmpty(a, b);
  const Ranks r = RankPooled(a, b);
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double n = n1 + n2;
  const double mu = n1 * n2 / 2.0;
  const double var =
      n1 * n2 / 12.0 * ((n + 1.0) - r.tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) return 1.0;
  const double dev = std::max(0.0, std::abs(UStatistic(a, r) - mu) - 0.5);
  return std::min(1.0, std::erfc(dev / std::sqrt(var) / std::sqrt(2.0)));
}

double MannWhitneyU(std::span<const double> a, std::span<const double> b) {
  RequireNonEmpty(a, b);
  if (a.size() + b.size() <= 20 && RankPooled(a, b).tie_term == 0.0) {
    return MannWhitneyExact(a, b);
  }
  return MannWhitneyNormal(a, b);
}

double Pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("Pearson length mismatch");
  if (a.size() < 2) throw std::invalid_argument("Pearson needs at least 2 values");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw UndefinedCorrelation("Pearson correlation of a constant input");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::string OutcomeName(Outcome o) {
  switch (o) {
    case Outcome::kTP: return "TP";
    case Outcome::kFP: return "FP";
    case Outcome::kTN: return "TN";
    case Outcome::kFN: return "FN";
  }
  return "?";
}

Outcome Classify(double p_clear, double p_fhe, double threshold) {
  const bool clear = p_clear < threshold, fhe = p_fhe < threshold;
  if (clear) return fhe ? Outcome::kTP : Outcome::kFN;
  return fhe ? Outcome::kFP : Outcome::kTN;
}

std::string DiscoveryErrorReport::TableCell() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f%% (%d)", 100.0 * error_rate, fp + fn);
  return buf;
}

std::vector<PairTestResult> RunPairTests(
    std::span<const std::string> labels,
    std::span<const DescriptorValues> clear,
    std::span<const DescriptorValues> fhe, double threshold) {
  if (labels.size() != clear.size() || labels.size() != fhe.size()) {
    throw std::invalid_argument("labels and descriptor rows differ in count");
  }
  const std::set<std::string> classes(labels.begin(), labels.end());
  std::vector<PairTestResult> out;
  for (int d = 0; d < kNumDescriptors; ++d) {
    for (auto i = classes.begin(); i != classes.end(); ++i) {
      for (auto j = std::next(i); j != classes.end(); ++j) {
        std::vector<double> ca, cb, fa, fb;
        for (std::size_t n = 0; n < labels.size(); ++n) {
          if (labels[n] == *i) {
            ca.push_back(clear[n][d]);
            fa.push_back(fhe[n][d]);
          } else if (labels[n] == *j) {
            cb.push_back(clear[n][d]);
            fb.push_back(fhe[n][d]);
          }
        }
        PairTestResult r;
        r.descriptor = DescriptorNames()[d];
        r.class_pair = {*i, *j};
        r.p_clear = MannWhitneyU(ca, cb);
        r.p_fhe = MannWhitneyU(fa, fb);
        r.outcome = Classify(r.p_clear, r.p_fhe, threshold);
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

DiscoveryErrorReport DiscoveryErrors(std::span<const PairTestResult> results) {
  DiscoveryErrorReport rep;
  for (const PairTestResult& r : results) {
    switch (r.outcome) {
      case Outcome::kTP: ++rep.tp; break;
      case Outcome::kFP: ++rep.fp; break;
      case Outcome::kTN: ++rep.tn; break;
      case Outcome::kFN: ++rep.fn; break;
    }
  }
  rep.n = static_cast<int>(results.size());
  rep.error_rate = rep.n == 0 ? 0.0 : static_cast<double>(rep.fp + rep.fn) / rep.n;
  return rep;
}

namespace {

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::string PairTestsCsv(std::span<const PairTestResult> results) {
  std::string out = "descriptor,class_a,class_b,p_clear,p_fhe,outcome\n";
  for (const PairTestResult& r : results) {
    out += r.descriptor + ',' + r.class_pair.first + ',' + r.class_pair.second +
           ',' + Num(r.p_clear) + ',' + Num(r.p_fhe) + ',' +
           OutcomeName(r.outcome) + '\n';
  }
  return out;
}

std::string PValueScatterCsv(std::span<const PairTestResult> results) {
  std::string out = "descriptor,class_a,class_b,log10_p_clear,log10_p_fhe\n";
  auto lg = [](double p) { return std::log10(std::max(p, 1e-300)); };
  for (const PairTestResult& r : results) {
    out += r.descriptor + ',' + r.class_pair.first + ',' + r.class_pair.second +
           ',' + Num(lg(r.p_clear)) + ',' + Num(lg(r.p_fhe)) + '\n';
  }
  return out;
}

std::string DiscoveryReportJson(const DiscoveryErrorReport& report,
                                double threshold) {
  nlohmann::ordered_json j;
  j["threshold"] = threshold;
  j["n"] = report.n;
  j["tp"] = report.tp;
  j["fp"] = report.fp;
  j["tn"] = report.tn;
  j["fn"] = report.fn;
  j["error_rate"] = report.error_rate;
  j["table_cell"] = report.TableCell();
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Grid search.

std::vector<BitWidthConfig> DefaultGrid(int lo, int hi) {
  std::vector<BitWidthConfig> grid;
  for (int i = lo; i <= hi; ++i)
    for (int o = lo; o <= hi; ++o)
      for (int w = lo; w <= hi; ++w)
        for (int m = lo; m <= hi; ++m) grid.push_back({i, o, w, m});
  return grid;
}

bool FrontEndFeasible(const BitWidthConfig& bits, TransformKind kind,
                      const ApproxSpec& approx, const TransformConfig& config) {
  const QuantizedWeights w =
      QuantizeWeights(BankMatrix(FrontEndBank(kind, approx, config)), bits.weight);
  const std::int64_t zw = w.params.ZeroPoint();
  std::int64_t taps = 0;
  for (std::size_t r = 0; r < w.values.rows(); ++r) {
    std::int64_t n = 0;
    for (std::size_t c = 0; c < w.values.cols(); ++c) n += w.values(r, c) != zw;
    taps = std::max(taps, n);
  }
  return taps == 0 || AccumulatorBits(taps, bits.input, bits.weight) <= kMaxBits;
}

namespace {

auto Key(const BitWidthConfig& c) {
  return std::make_tuple(c.input, c.output, c.weight, c.intermediate);
}

std::vector<AudioBuffer> Truncated(std::span<const AudioBuffer> clips,
                                   std::size_t length) {
  std::vector<AudioBuffer> out;
  for (const AudioBuffer& a : clips) {
    if (a.samples.size() < length) {
      throw std::invalid_argument("evaluation clip shorter than the calibration length");
    }
    out.push_back(AudioBuffer{
        std::vector<double>(a.samples.begin(), a.samples.begin() + length),
        a.sample_rate_hz});
  }
  return out;
}

struct Shared {
  const GridSearchRequest& request;
  std::span<const AudioBuffer> calibration;
  std::vector<AudioBuffer> evaluation;
  std::vector<DescriptorValues> clear_raw;
  std::vector<RealMatrix> clear_spec;
};

void EvaluateConfig(const Shared& s, GridSearchResult& res) {
  const GridSearchRequest& q = s.request;
  const bool pearson = q.objective == Objective::kDescriptorPearson;
  const std::vector<TransformKind> heads =
      pearson ? std::vector<TransformKind>{TransformKind::kStft,
                                           TransformKind::kGammatone}
              : std::vector<TransformKind>{q.transform};
  for (TransformKind k : heads) {
    if (!FrontEndFeasible(res.config, k, q.approx, q.config)) {
      res.reason = TransformName(k) + " convolution exceeds 16 bits";
      return;
    }
  }
  try {
    if (pearson) {
      const DescriptorCircuit circuit =
          BuildDescriptorCircuit(q.approx, res.config, q.config, s.calibration);
      std::array<std::vector<double>, kNumDescriptors> clear, fhe;
      for (std::size_t n = 0; n < s.evaluation.size(); ++n) {
        const DescriptorValues c = circuit.norms.Apply(s.clear_raw[n]);
        const DescriptorValues f = RunDescriptorCircuit(circuit, s.evaluation[n]);
        for (int i = 0; i < kNumDescriptors; ++i) {
          clear[i].push_back(c[i]);
          fhe[i].push_back(f[i]);
        }
      }
      res.feasible = true;
      double sum = 0.0;
      for (int i = 0; i < kNumDescriptors; ++i) {
        try {
          res.r[i] = Pearson(clear[i], fhe[i]);
          sum += *res.r[i];
        } catch (const UndefinedCorrelation&) {
          res.r[i].reset();
        }
      }
      res.mean_r = sum / kNumDescriptors;
    } else {
      PipelineSpec spec{q.transform, q.approx, res.config, q.config};
      const CircuitGraph graph = BuildPipeline(spec, s.calibration);
      double sum = 0.0;
      for (std::size_t n = 0; n < s.evaluation.size(); ++n) {
        sum += NormalizedEuclidean(s.clear_spec[n],
                                   RunPipeline(graph, s.evaluation[n]).values);
      }
      res.feasible = true;
      res.mean_distance = sum / static_cast<double>(s.evaluation.size());
    }
  } catch (const BudgetViolation& e) {
    res.feasible = false;
    res.reason = e.what();
  }
}

}  // namespace

std::vector<GridSearchResult> GridSearch(const GridSearchRequest& request,
                                         std::span<const AudioBuffer> calibration,
                                         std::span<const AudioBuffer> evaluation) {
  if (request.space.empty()) throw std::invalid_argument("empty grid");
  if (calibration.empty() || evaluation.empty()) {
    throw std::invalid_argument("grid search needs calibration and evaluation clips");
  }
  request.config.Validate();
  const bool pearson = request.objective == Objective::kDescriptorPearson;
  const std::vector<std::vector<double>> rows = CalibrationRows(calibration);
  std::vector<AudioBuffer> calib;
  for (const auto& r : rows) {
    calib.push_back(AudioBuffer{r, calibration.front().sample_rate_hz});
  }
  Shared s{request, calib, {}, {}, {}};
  s.evaluation = pearson ? Truncated(evaluation, rows.front().size())
                         : std::vector<AudioBuffer>(evaluation.begin(),
                                                    evaluation.end());
  for (const AudioBuffer& x : s.evaluation) {
    if (pearson) {
      s.clear_raw.push_back(RawDescriptors(x, request.config));
    } else {
      s.clear_spec.push_back(
          ClearTransform(x, request.transform, request.config).values);
    }
  }

  std::vector<GridSearchResult> results(request.space.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    request.space[i].Validate();
    results[i].config = request.space[i];
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < results.size(); i = next++) {
      EvaluateConfig(s, results[i]);
    }
  };
  const int threads = std::max(1, request.threads);
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  std::sort(results.begin(), results.end(),
            [pearson](const GridSearchResult& a, const GridSearchResult& b) {
              if (a.feasible != b.feasible) return a.feasible;
              if (a.feasible) {
                const double va = pearson ? -a.mean_r : a.mean_distance;
                const double vb = pearson ? -b.mean_r : b.mean_distance;
                if (va != vb) return va < vb;
              }
              return Key(a.config) < Key(b.config);
            });
  return results;
}

double WeightBitShare(std::span<const GridSearchResult> ranked, int top) {
  double sum = 0.0;
  int n = 0;
  for (const GridSearchResult& r : ranked) {
    if (!r.feasible || n >= top) break;
    const BitWidthConfig& c = r.config;
    sum += static_cast<double>(c.weight) /
           (c.input + c.output + c.weight + c.intermediate);
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

namespace {

std::string BitsText(const BitWidthConfig& c) {
  return std::to_string(c.input) + ',' + std::to_string(c.output) + ',' +
         std::to_string(c.weight) + ',' + std::to_string(c.intermediate);
}

}  // namespace

std::string GridSearchJson(std::span<const GridSearchResult> ranked,
                           Objective objective) {
  const bool pearson = objective == Objective::kDescriptorPearson;
  nlohmann::ordered_json j;
  j["objective"] = pearson ? "descriptor_pearson" : "intrinsic_distance";
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  nlohmann::ordered_json infeasible = nlohmann::ordered_json::array();
  int feasible = 0;
  for (const GridSearchResult& r : ranked) {
    nlohmann::ordered_json e;
    e["bits"] = {r.config.input, r.config.output, r.config.weight,
                 r.config.intermediate};
    if (!r.feasible) {
      e["reason"] = r.reason;
      infeasible.push_back(e);
      continue;
    }
    ++feasible;
    e["rank"] = feasible;
    if (pearson) {
      nlohmann::ordered_json rs;
      for (int i = 0; i < kNumDescriptors; ++i) {
        rs[DescriptorNames()[i]] =
            r.r[i] ? nlohmann::ordered_json(*r.r[i]) : nlohmann::ordered_json();
      }
      e["pearson"] = rs;
      e["mean_r"] = r.mean_r;
    } else {
      e["mean_distance"] = r.mean_distance;
    }
    list.push_back(e);
  }
  j["feasible"] = feasible;
  j["infeasible"] = static_cast<int>(ranked.size()) - feasible;
  j["weight_bit_share_top10"] = WeightBitShare(ranked, 10);
  j["ranking"] = list;
  j["skipped"] = infeasible;
  return j.dump(2) + "\n";
}

std::string GridSearchCsv(std::span<const GridSearchResult> ranked,
                          Objective objective) {
  const bool pearson = objective == Objective::kDescriptorPearson;
  std::string out = "rank,bi,bo,bw,bm,feasible,";
  if (pearson) {
    for (const std::string& n : DescriptorNames()) out += "r_" + n + ',';
    out += "mean_r\n";
  } else {
    out += "mean_distance\n";
  }
  int rank = 0;
  for (const GridSearchResult& r : ranked) {
    out += (r.feasible ? std::to_string(++rank) : std::string()) + ',' +
           BitsText(r.config) + ',' + (r.feasible ? "1" : "0");
    if (pearson) {
      for (const auto& v : r.r) out += ',' + (r.feasible && v ? Num(*v) : "");
      out += ',' + (r.feasible ? Num(r.mean_r) : "");
    } else {
      out += ',' + (r.feasible ? Num(r.mean_distance) : "");
    }
    out += '\n';
  }
  return out;
}

}  // namespace qasp
