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


// Integer dataflow circuits: the stand-in for an FHE program.
//
// Every edge carries either quantized integers (QuantParams) or exact integer
// accumulators whose real value is scale * v. Convolutions, sums and
// differences work on zero-point-centered integers; every nonlinearity is a
// single-input lookup table keyed on the incoming integer. Each edge has a
// worst-case magnitude fixed at construction, and execution refuses any value
// beyond it.

#ifndef QASP_CIRCUIT_H_
#define QASP_CIRCUIT_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "qasp/approx.h"
#include "qasp/matrix.h"
#include "qasp/quant.h"
#include "qasp/signal.h"
#include "qasp/transform.h"

namespace qasp {

struct EdgeSpec {
  enum class Kind { kQuantized, kAccumulator };

  Kind kind = Kind::kQuantized;
  QuantParams params;          // kQuantized
  double scale = 1.0;          // kAccumulator: real = scale * v
  std::int64_t worst_abs = 0;  // bound on |v| (|v - zero point| if quantized)
  int bits = 0;                // declared width
  std::size_t frames = 0;
  std::size_t channels = 0;

  bool quantized() const { return kind == Kind::kQuantized; }
  // Integer whose real value is 0.
  std::int64_t Zero() const { return quantized() ? params.ZeroPoint() : 0; }
  double Real(std::int64_t v) const;
};

enum class LutKind { kIdentity, kSquare, kAbs, kLog, kSqrt };
std::string LutKindName(LutKind kind);

// y = (f(pre_scale * v) - center) / norm, with f(v) = log(max(v, 0) + eps)
// for kLog and sqrt(max(v, 0)) for kSqrt.
struct LutFunction {
  LutKind kind = LutKind::kIdentity;
  double pre_scale = 1.0;
  double center = 0.0;
  double norm = 1.0;
  double eps = kLogFloor;

  double operator()(double v) const;
};

enum class ConvMode {
  kTemporal,  // kernels slide over the single input row with a stride
  kChannel,   // one matrix product per frame across input channels
};
enum class ReduceAxis { kTime, kChannels };

struct InputOp {};
struct ConvOp {
  ConvMode mode = ConvMode::kTemporal;
  int stride = 1;
  IntMatrix weights;  // quantized values in weight_params' range
  QuantParams weight_params;
  // Nonzero centered taps per row.
  std::vector<std::vector<std::pair<int, std::int64_t>>> sparse;
  std::int64_t max_taps = 0;  // L_taps
};
struct LutOp {
  LutFunction fn;
  bool exact = false;  // integer abs / square of the centered input
  std::vector<std::int64_t> table;
  std::int64_t table_lo = 0;
};
struct GroupSumOp {
  std::vector<std::vector<int>> groups;
};
struct ReduceSumOp {
  ReduceAxis axis = ReduceAxis::kTime;
};
struct SubtractOp {};  // inputs[0] - inputs[1], the second broadcast over time
struct ConcatOp {};    // along channels

using NodeOp =
    std::variant<InputOp, ConvOp, LutOp, GroupSumOp, ReduceSumOp, SubtractOp,
                 ConcatOp>;

struct Node {
  std::string name;
  std::vector<int> inputs;
  EdgeSpec out;
  NodeOp op;

  std::string KindName() const;
};

class CircuitGraph {
 public:
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(int id) const { return nodes_.at(id); }
  int output() const { return static_cast<int>(nodes_.size()) - 1; }
  bool empty() const { return nodes_.empty(); }
  std::size_t input_length() const { return input_length_; }
  // Set when a reduction over time makes the graph length-specific.
  bool fixed_length() const { return fixed_length_; }

  int AddInput(const QuantParams& params, std::size_t length,
               const std::string& name = "input");
  int AddConv(int input, ConvMode mode, const IntMatrix& weights,
              const QuantParams& weight_params, int stride,
              const std::string& name);
  int AddLut(int input, const LutFunction& fn, const QuantParams& out,
             const std::string& name);
  // Exact |c| or c^2 of the centered input c; output is an accumulator.
  int AddExactLut(int input, LutKind kind, const std::string& name);
  int AddGroupSum(int input, const std::vector<std::vector<int>>& groups,
                  const std::string& name);
  int AddReduceSum(int input, ReduceAxis axis, const std::string& name);
  int AddSubtract(int a, int b, const std::string& name);
  int AddConcat(const std::vector<int>& inputs, const std::string& name);

 private:
  int Push(Node node);
  const EdgeSpec& Edge(int id) const;

  std::vector<Node> nodes_;
  std::size_t input_length_ = 0;
  bool fixed_length_ = false;
};

// Largest centered magnitude an edge can hold.
std::int64_t CenteredWorst(const EdgeSpec& edge);

struct NodeBudget {
  int node = 0;
  std::string name;
  std::string kind;
  int worst_case_bits = 0;
  int observed_max_bits = -1;  // -1 until an execution trace is merged
  std::int64_t taps = 0;       // L_taps for convolutions
};

struct AccumulatorReport {
  std::vector<NodeBudget> nodes;
  std::vector<int> violations;  // node ids with worst_case_bits > 16

  bool ok() const { return violations.empty(); }
  int MaxWorstCaseBits() const;
  std::string ToString() const;
};

AccumulatorReport CheckBudget(const CircuitGraph& graph);

class BudgetViolation : public std::runtime_error {
 public:
  explicit BudgetViolation(AccumulatorReport report);
  const AccumulatorReport& report() const { return report_; }

 private:
  AccumulatorReport report_;
};

class OverflowError : public std::runtime_error {
 public:
  OverflowError(int node, const std::string& message);
  int node() const { return node_; }

 private:
  int node_;
};

struct ExecutionResult {
  std::vector<IntMatrix> values;     // per node
  std::vector<int> observed_bits;    // per node
  const IntMatrix& output() const { return values.back(); }
};

// Integer-only evaluation. Throws OverflowError when a value exceeds its
// edge's worst case.
ExecutionResult Execute(const CircuitGraph& graph, std::span<const double> x);

// Dequantized view of the output node.
RealMatrix DequantizeOutput(const CircuitGraph& graph, const IntMatrix& out);

void MergeObserved(AccumulatorReport& report, const ExecutionResult& result);

// The floating-point pipeline with Quantize/Dequantize inserted on every
// quantized edge. Reals are the dequantized values; ints are filled for
// quantized edges only.
struct FloatSimulation {
  std::vector<RealMatrix> reals;
  std::vector<IntMatrix> ints;
};
FloatSimulation SimulateFloat(const CircuitGraph& graph,
                              std::span<const double> x);

// Node ids of quantized edges whose integers differ between the two paths.
std::vector<int> CompareWithFloat(const CircuitGraph& graph,
                                  const ExecutionResult& exec,
                                  const FloatSimulation& sim);

// Quantizes real weights with exact-zero signed parameters.
struct QuantizedWeights {
  IntMatrix values;
  QuantParams params;
};
QuantizedWeights QuantizeWeights(const RealMatrix& weights, int bits);
RealMatrix BankMatrix(const KernelBank& bank);

// Builds a graph while tracking the fake-quantized value of every node on a
// calibration set; every new quantized edge is calibrated on those values.
class CircuitBuilder {
 public:
  explicit CircuitBuilder(std::vector<std::vector<double>> calibration);

  CircuitGraph& graph() { return graph_; }
  const std::vector<RealMatrix>& Values(int node) const {
    return values_.at(node);
  }

  int Input(int bits, bool is_signed = false);
  int Conv(int input, ConvMode mode, const RealMatrix& weights, int bits,
           int stride, const std::string& name);
  // Calibrated requantization LUT.
  int Lut(int input, const LutFunction& fn, int bits, bool is_signed,
          const std::string& name);
  // LUT with given output parameters.
  int LutWithParams(int input, const LutFunction& fn, const QuantParams& out,
                    const std::string& name);
  int ExactLut(int input, LutKind kind, const std::string& name);
  int GroupSum(int input, const std::vector<std::vector<int>>& groups,
               const std::string& name);
  int ReduceSum(int input, ReduceAxis axis, const std::string& name);
  int Subtract(int a, int b, const std::string& name);
  int Concat(const std::vector<int>& inputs, const std::string& name);

  // Raw LUT results over the calibration set, before output quantization.
  std::vector<RealMatrix> LutPreview(int input, const LutFunction& fn) const;

  // Per-channel sum over time of squared deviations from the time mean:
  // sum -> mean on the input grid -> difference -> square (at `bits`) -> sum.
  // A sqrt LUT with pre_scale 1/T on the result gives the population std.
  int SquaredDeviationSum(int input, int bits, const std::string& prefix);

 private:
  int Track(int node);

  std::vector<std::vector<double>> calibration_;
  CircuitGraph graph_;
  std::vector<std::vector<RealMatrix>> values_;
};

struct PipelineSpec {
  TransformKind transform = TransformKind::kStft;
  ApproxSpec approx = Conventional{};
  BitWidthConfig bits;
  TransformConfig config;
};

// Truncates every clip to the shortest length and returns the sample rows.
std::vector<std::vector<double>> CalibrationRows(
    std::span<const AudioBuffer> calibration);

// input -> conv -> requant (B_m) -> energy -> [mel -> [log -> dct]] -> B_o.
// Throws BudgetViolation when any node's worst case exceeds 16 bits.
CircuitGraph BuildPipeline(const PipelineSpec& spec,
                           std::span<const AudioBuffer> calibration);

// conv -> requant (B_m) -> exact square/abs -> per-channel sum on top of an
// input node. Returns the accumulator node holding the per-channel energy.
int AddFrontEnd(CircuitBuilder& builder, int input, TransformKind kind,
                const ApproxSpec& approx, const BitWidthConfig& bits,
                const TransformConfig& config, const std::string& prefix);

Spectrogram SimulateFheTransform(const AudioBuffer& x, const PipelineSpec& spec,
                                 std::span<const AudioBuffer> calibration);
Spectrogram RunPipeline(const CircuitGraph& graph, const AudioBuffer& x);

std::string CircuitToJson(const CircuitGraph& graph, bool include_weights);

}  // namespace qasp

#endif  // QASP_CIRCUIT_H_
