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


// Fidelity evaluation: intrinsic spectrogram distance, Mann-Whitney
// replication of class-pair decisions, and bit-width grid search.

#ifndef QASP_EVAL_H_
#define QASP_EVAL_H_

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qasp/approx.h"
#include "qasp/descriptors.h"
#include "qasp/quant.h"
#include "qasp/signal.h"
#include "qasp/transform.h"

namespace qasp {

inline constexpr double kSignificance = 0.05;

// ||S1/||S1|| - S2/||S2|||_F. A zero operand normalizes to zero, so the
// distance is 0 when both vanish and 1 when only one does.
double NormalizedEuclidean(const RealMatrix& a, const RealMatrix& b);

// Two-sided p-value. Exact null distribution when |a| + |b| <= 20 and the
// pooled sample has no ties; otherwise the normal approximation with tie and
// continuity corrections.
double MannWhitneyU(std::span<const double> a, std::span<const double> b);
double MannWhitneyExact(std::span<const double> a, std::span<const double> b);
double MannWhitneyNormal(std::span<const double> a, std::span<const double> b);

class UndefinedCorrelation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

double Pearson(std::span<const double> a, std::span<const double> b);

enum class Outcome { kTP, kFP, kTN, kFN };
std::string OutcomeName(Outcome o);
Outcome Classify(double p_clear, double p_fhe, double threshold = kSignificance);

struct PairTestResult {
  std::string descriptor;
  std::pair<std::string, std::string> class_pair;
  double p_clear = 1.0;
  double p_fhe = 1.0;
  Outcome outcome = Outcome::kTN;
};

struct DiscoveryErrorReport {
  int tp = 0, fp = 0, tn = 0, fn = 0;
  int n = 0;
  double error_rate = 0.0;  // (fp + fn) / n; 0 for n = 0

  // "12.50% (3)"
  std::string TableCell() const;
};

// Every descriptor x unordered class pair, classes in sorted order.
std::vector<PairTestResult> RunPairTests(
    std::span<const std::string> labels,
    std::span<const DescriptorValues> clear,
    std::span<const DescriptorValues> fhe,
    double threshold = kSignificance);

DiscoveryErrorReport DiscoveryErrors(std::span<const PairTestResult> results);

// descriptor,class_a,class_b,p_clear,p_fhe,outcome
std::string PairTestsCsv(std::span<const PairTestResult> results);
// descriptor,class_a,class_b,log10_p_clear,log10_p_fhe
std::string PValueScatterCsv(std::span<const PairTestResult> results);
std::string DiscoveryReportJson(const DiscoveryErrorReport& report,
                                double threshold = kSignificance);

// ---------------------------------------------------------------------------
// Grid search.

enum class Objective { kDescriptorPearson, kIntrinsicDistance };

struct GridSearchResult {
  BitWidthConfig config;
  bool feasible = false;
  std::string reason;  // why infeasible or failed
  // kDescriptorPearson: per-descriptor r; nullopt when a side is constant.
  std::array<std::optional<double>, kNumDescriptors> r{};
  double mean_r = 0.0;  // undefined r counts as 0
  // kIntrinsicDistance: mean normalized distance over the evaluation set.
  double mean_distance = 0.0;
};

// {lo..hi}^4.
std::vector<BitWidthConfig> DefaultGrid(int lo = 2, int hi = 8);

struct GridSearchRequest {
  std::vector<BitWidthConfig> space;
  Objective objective = Objective::kDescriptorPearson;
  TransformKind transform = TransformKind::kStft;  // distance objective only
  ApproxSpec approx = Conventional{};
  TransformConfig config;
  int threads = 1;
};

// Feasible results first, best first (mean r descending or mean distance
// ascending), ties by (B_i, B_o, B_w, B_m); infeasible ones follow in
// lexicographic order.
std::vector<GridSearchResult> GridSearch(const GridSearchRequest& request,
                                         std::span<const AudioBuffer> calibration,
                                         std::span<const AudioBuffer> evaluation);

// Cheap front-end check from Eq. (4) alone, before any calibration.
bool FrontEndFeasible(const BitWidthConfig& bits, TransformKind kind,
                      const ApproxSpec& approx, const TransformConfig& config);

// Mean B_w / (B_i + B_o + B_w + B_m) over the top `top` feasible results.
double WeightBitShare(std::span<const GridSearchResult> ranked, int top);

std::string GridSearchJson(std::span<const GridSearchResult> ranked,
                           Objective objective);
std::string GridSearchCsv(std::span<const GridSearchResult> ranked,
                          Objective objective);

}  // namespace qasp

#endif  // QASP_EVAL_H_
