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


#include "qasp/circuit.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace qasp {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr std::int64_t kMaxTableSize = std::int64_t{1} << 20;

std::int64_t Levels(int bits) { return (std::int64_t{1} << bits) - 1; }

void RequireExactZero(const QuantParams& params, const std::string& what) {
  const double zero = Dequantize(params.ZeroPoint(), params);
  if (std::abs(zero) > 1e-9 * params.Scale()) {
    throw std::invalid_argument(what + " needs parameters with an exact zero");
  }
}

int SignedBitLength(std::int64_t lo, std::int64_t hi) {
  int bits = 1;
  while (bits < 63 && (lo < -(std::int64_t{1} << (bits - 1)) ||
                       hi > (std::int64_t{1} << (bits - 1)) - 1)) {
    ++bits;
  }
  return bits;
}

double EdgeScale(const EdgeSpec& edge) {
  return edge.quantized() ? edge.params.Scale() : edge.scale;
}

}  // namespace

double EdgeSpec::Real(std::int64_t v) const {
  return quantized() ? Dequantize(v, params) : scale * static_cast<double>(v);
}

std::string LutKindName(LutKind kind) {
  switch (kind) {
    case LutKind::kIdentity: return "identity";
    case LutKind::kSquare: return "square";
    case LutKind::kAbs: return "abs";
    case LutKind::kLog: return "log";
    case LutKind::kSqrt: return "sqrt";
  }
  return "unknown";
}

double LutFunction::operator()(double v) const {
  const double u = pre_scale * v;
  double f = u;
  switch (kind) {
    case LutKind::kIdentity: break;
    case LutKind::kSquare: f = u * u; break;
    case LutKind::kAbs: f = std::abs(u); break;
    case LutKind::kLog: f = std::log(std::max(u, 0.0) + eps); break;
    case LutKind::kSqrt: f = std::sqrt(std::max(u, 0.0)); break;
  }
  return (f - center) / norm;
}

std::string Node::KindName() const {
  return std::visit(
      Overloaded{
          [](const InputOp&) { return std::string("input"); },
          [](const ConvOp& c) {
            return std::string(c.mode == ConvMode::kTemporal ? "conv"
                                                             : "matmul");
          },
          [](const LutOp& l) {
            return (l.exact ? "exact_" : "lut_") + LutKindName(l.fn.kind);
          },
          [](const GroupSumOp&) { return std::string("group_sum"); },
          [](const ReduceSumOp& r) {
            return std::string(r.axis == ReduceAxis::kTime ? "sum_time"
                                                           : "sum_channels");
          },
          [](const SubtractOp&) { return std::string("subtract"); },
          [](const ConcatOp&) { return std::string("concat"); },
      },
      op);
}

std::int64_t CenteredWorst(const EdgeSpec& edge) {
  if (!edge.quantized()) return edge.worst_abs;
  const std::int64_t z = edge.params.ZeroPoint();
  return std::max(edge.params.Max() - z, z - edge.params.Min());
}

// ---------------------------------------------------------------------------
// Graph construction.

const EdgeSpec& CircuitGraph::Edge(int id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size())) {
    throw std::invalid_argument("unknown node id " + std::to_string(id));
  }
  return nodes_[id].out;
}

int CircuitGraph::Push(Node node) {
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

int CircuitGraph::AddInput(const QuantParams& params, std::size_t length,
                           const std::string& name) {
  if (!nodes_.empty()) throw std::invalid_argument("input must be the first node");
  if (length == 0) throw std::invalid_argument("input length must be positive");
  params.Validate();
  Node node;
  node.name = name;
  node.op = InputOp{};
  node.out.params = params;
  node.out.bits = params.bits;
  node.out.frames = 1;
  node.out.channels = length;
  node.out.worst_abs = CenteredWorst(node.out);
  input_length_ = length;
  return Push(std::move(node));
}

int CircuitGraph::AddConv(int input, ConvMode mode, const IntMatrix& weights,
                          const QuantParams& weight_params, int stride,
                          const std::string& name) {
  const EdgeSpec& in = Edge(input);
  if (!in.quantized()) throw std::invalid_argument(name + ": input must be quantized");
  RequireExactZero(in.params, name + " input");
  weight_params.Validate();
  RequireExactZero(weight_params, name + " weights");
  if (weights.empty()) throw std::invalid_argument(name + ": empty weights");
  if (stride < 1) throw std::invalid_argument(name + ": stride must be >= 1");

  ConvOp op;
  op.mode = mode;
  op.stride = stride;
  op.weights = weights;
  op.weight_params = weight_params;
  const std::int64_t zw = weight_params.ZeroPoint();
  op.sparse.resize(weights.rows());
  for (std::size_t r = 0; r < weights.rows(); ++r) {
    for (std::size_t c = 0; c < weights.cols(); ++c) {
      const std::int64_t q = weights(r, c);
      if (q < weight_params.Min() || q > weight_params.Max()) {
        throw std::invalid_argument(name + ": weight outside its range");
      }
      if (q != zw) op.sparse[r].emplace_back(static_cast<int>(c), q - zw);
    }
    op.max_taps = std::max<std::int64_t>(op.max_taps, op.sparse[r].size());
  }

  Node node;
  node.name = name;
  node.inputs = {input};
  node.out.kind = EdgeSpec::Kind::kAccumulator;
  node.out.scale = in.params.Scale() * weight_params.Scale();
  node.out.channels = weights.rows();
  if (mode == ConvMode::kTemporal) {
    if (in.frames != 1 || weights.cols() > in.channels) {
      throw std::invalid_argument(name + ": kernel longer than the signal");
    }
    node.out.frames = (in.channels - weights.cols()) / stride + 1;
  } else {
    if (weights.cols() != in.channels) {
      throw std::invalid_argument(name + ": weight width != input channels");
    }
    node.out.frames = in.frames;
  }
  node.out.worst_abs =
      op.max_taps * Levels(in.params.bits) * Levels(weight_params.bits);
  node.out.bits = op.max_taps == 0
                      ? 0
                      : AccumulatorBits(op.max_taps, in.params.bits,
                                        weight_params.bits);
  node.op = std::move(op);
  return Push(std::move(node));
}

int CircuitGraph::AddLut(int input, const LutFunction& fn, const QuantParams& out,
                         const std::string& name) {
  const EdgeSpec& in = Edge(input);
  out.Validate();
  LutOp op;
  op.fn = fn;
  std::int64_t lo, hi;
  if (in.quantized()) {
    lo = in.params.Min();
    hi = in.params.Max();
  } else {
    lo = -in.worst_abs;
    hi = in.worst_abs;
  }
  if (hi - lo + 1 <= kMaxTableSize) {
    op.table_lo = lo;
    op.table.reserve(hi - lo + 1);
    for (std::int64_t v = lo; v <= hi; ++v) {
      op.table.push_back(Quantize(fn(in.Real(v)), out));
    }
  }
  Node node;
  node.name = name;
  node.inputs = {input};
  node.out.params = out;
  node.out.bits = out.bits;
  node.out.frames = in.frames;
  node.out.channels = in.channels;
  node.out.worst_abs = CenteredWorst(node.out);
  node.op = std::move(op);
  return Push(std::move(node));
}

int CircuitGraph::AddExactLut(int input, LutKind kind, const std::string& name) {
  const EdgeSpec& in = Edge(input);
  if (kind != LutKind::kAbs && kind != LutKind::kSquare) {
    throw std::invalid_argument(name + ": exact LUTs are abs or square");
  }
  if (!in.quantized()) throw std::invalid_argument(name + ": input must be quantized");
  RequireExactZero(in.params, name + " input");
  LutOp op;
  op.fn.kind = kind;
  op.exact = true;
  op.table_lo = in.params.Min();
  const std::int64_t z = in.params.ZeroPoint();
  std::int64_t worst = 0;
  for (std::int64_t v = in.params.Min(); v <= in.params.Max(); ++v) {
    const std::int64_t c = v - z;
    const std::int64_t y = kind == LutKind::kAbs ? std::abs(c) : c * c;
    op.table.push_back(y);
    worst = std::max(worst, y);
  }
  Node node;
  node.name = name;
  node.inputs = {input};
  node.out.kind = EdgeSpec::Kind::kAccumulator;
  const double s = in.params.Scale();
  node.out.scale = kind == LutKind::kAbs ? s : s * s;
  node.out.worst_abs = worst;
  node.out.bits = MagnitudeBits(worst);
  node.out.frames = in.frames;
  node.out.channels = in.channels;
  node.op = std::move(op);
  return Push(std::move(node));
}

int CircuitGraph::AddGroupSum(int input,
                              const std::vector<std::vector<int>>& groups,
                              const std::string& name) {
  const EdgeSpec& in = Edge(input);
  std::size_t widest = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument(name + ": empty channel group");
    for (int c : g) {
      if (c < 0 || static_cast<std::size_t>(c) >= in.channels) {
        throw std::invalid_argument(name + ": channel index out of range");
      }
    }
    widest = std::max(widest, g.size());
  }
  Node node;
  node.name = name;
  node.inputs = {input};
  node.out.kind = EdgeSpec::Kind::kAccumulator;
  node.out.scale = EdgeScale(in);
  node.out.worst_abs = static_cast<std::int64_t>(widest) * CenteredWorst(in);
  node.out.bits = MagnitudeBits(node.out.worst_abs);
  node.out.frames = in.frames;
  node.out.channels = groups.size();
  node.op = GroupSumOp{groups};
  return Push(std::move(node));
}

int CircuitGraph::AddReduceSum(int input, ReduceAxis axis,
                               const std::string& name) {
  const EdgeSpec& in = Edge(input);
  const std::size_t count = axis == ReduceAxis::kTime ? in.frames : in.channels;
  Node node;
  node.name = name;
  node.inputs = {input};
  node.out.kind = EdgeSpec::Kind::kAccumulator;
  node.out.scale = EdgeScale(in);
  node.out.worst_abs = static_cast<std::int64_t>(count) * CenteredWorst(in);
  node.out.bits = MagnitudeBits(node.out.worst_abs);
  node.out.frames = axis == ReduceAxis::kTime ? 1 : in.frames;
  node.out.channels = axis == ReduceAxis::kTime ? in.channels : 1;
  node.op = ReduceSumOp{axis};
  if (axis == ReduceAxis::kTime) fixed_length_ = true;
  return Push(std::move(node));
}

int CircuitGraph::AddSubtract(int a, int b, const std::string& name) {
  const EdgeSpec& ea = Edge(a);
  const EdgeSpec& eb = Edge(b);
  if (!ea.quantized() || !eb.quantized() || !(ea.params == eb.params)) {
    throw std::invalid_argument(name + ": operands need identical parameters");
  }
  RequireExactZero(ea.params, name);
  if (eb.frames != 1 || eb.channels != ea.channels) {
    throw std::invalid_argument(name + ": second operand must be 1 x channels");
  }
  Node node;
  node.name = name;
  node.inputs = {a, b};
  node.out.kind = EdgeSpec::Kind::kAccumulator;
  node.out.scale = ea.params.Scale();
  node.out.worst_abs = ea.params.Max() - ea.params.Min();
  node.out.bits = MagnitudeBits(node.out.worst_abs);
  node.out.frames = ea.frames;
  node.out.channels = ea.channels;
  node.op = SubtractOp{};
  return Push(std::move(node));
}

int CircuitGraph::AddConcat(const std::vector<int>& inputs,
                            const std::string& name) {
  if (inputs.empty()) throw std::invalid_argument(name + ": nothing to concat");
  const EdgeSpec& first = Edge(inputs[0]);
  Node node;
  node.name = name;
  node.inputs = inputs;
  node.out = first;
  node.out.channels = 0;
  for (int id : inputs) {
    const EdgeSpec& e = Edge(id);
    if (!e.quantized() || !(e.params == first.params) ||
        e.frames != first.frames) {
      throw std::invalid_argument(name + ": inputs need identical parameters");
    }
    node.out.channels += e.channels;
  }
  node.op = ConcatOp{};
  return Push(std::move(node));
}

// ---------------------------------------------------------------------------
// Budget reports.

int AccumulatorReport::MaxWorstCaseBits() const {
  int worst = 0;
  for (const NodeBudget& n : nodes) worst = std::max(worst, n.worst_case_bits);
  return worst;
}

std::string AccumulatorReport::ToString() const {
  std::ostringstream os;
  for (const NodeBudget& n : nodes) {
    os << n.node << ' ' << n.name << " (" << n.kind
       << ") worst=" << n.worst_case_bits;
    if (n.observed_max_bits >= 0) os << " observed=" << n.observed_max_bits;
    if (n.taps > 0) os << " taps=" << n.taps;
    if (n.worst_case_bits > kMaxBits) os << " OVER BUDGET";
    os << '\n';
  }
  return os.str();
}

AccumulatorReport CheckBudget(const CircuitGraph& graph) {
  AccumulatorReport report;
  for (std::size_t i = 0; i < graph.nodes().size(); ++i) {
    const Node& n = graph.nodes()[i];
    NodeBudget b;
    b.node = static_cast<int>(i);
    b.name = n.name;
    b.kind = n.KindName();
    b.worst_case_bits = n.out.bits;
    if (const auto* conv = std::get_if<ConvOp>(&n.op)) b.taps = conv->max_taps;
    if (b.worst_case_bits > kMaxBits) report.violations.push_back(b.node);
    report.nodes.push_back(std::move(b));
  }
  return report;
}

namespace {

std::string ViolationMessage(const AccumulatorReport& report) {
  std::ostringstream os;
  os << "16-bit budget exceeded at";
  for (int id : report.violations) {
    const NodeBudget& n = report.nodes[id];
    os << ' ' << n.name << " (" << n.worst_case_bits << " bits)";
  }
  return os.str();
}

}  // namespace

BudgetViolation::BudgetViolation(AccumulatorReport report)
    : std::runtime_error(ViolationMessage(report)), report_(std::move(report)) {}

OverflowError::OverflowError(int node, const std::string& message)
    : std::runtime_error(message), node_(node) {}

// ---------------------------------------------------------------------------
// Integer execution.

namespace {

IntMatrix ExecuteNode(const CircuitGraph& graph, int id,
                      const std::vector<IntMatrix>& values,
                      std::span<const double> x) {
  const Node& node = graph.node(id);
  auto centered = [&](int input) {
    const std::int64_t z = graph.node(input).out.Zero();
    IntMatrix c = values[input];
    for (auto& v : c.data()) v -= z;
    return c;
  };
  return std::visit(
      Overloaded{
          [&](const InputOp&) {
            IntMatrix q(1, x.size());
            for (std::size_t n = 0; n < x.size(); ++n) {
              q(0, n) = Quantize(x[n], node.out.params);
            }
            return q;
          },
          [&](const ConvOp& op) {
            const IntMatrix c = centered(node.inputs[0]);
            if (op.mode == ConvMode::kTemporal) {
              const std::size_t length = op.weights.cols();
              if (c.cols() < length) {
                throw std::invalid_argument("signal shorter than one frame");
              }
              const std::size_t frames = (c.cols() - length) / op.stride + 1;
              IntMatrix out(frames, op.sparse.size());
              for (std::size_t m = 0; m < frames; ++m) {
                const std::int64_t* frame = c.data().data() + m * op.stride;
                for (std::size_t r = 0; r < op.sparse.size(); ++r) {
                  std::int64_t acc = 0;
                  for (const auto& [n, w] : op.sparse[r]) acc += w * frame[n];
                  out(m, r) = acc;
                }
              }
              return out;
            }
            IntMatrix out(c.rows(), op.sparse.size());
            for (std::size_t m = 0; m < c.rows(); ++m) {
              for (std::size_t r = 0; r < op.sparse.size(); ++r) {
                std::int64_t acc = 0;
                for (const auto& [i, w] : op.sparse[r]) acc += w * c(m, i);
                out(m, r) = acc;
              }
            }
            return out;
          },
          [&](const LutOp& op) {
            const EdgeSpec& in = graph.node(node.inputs[0]).out;
            IntMatrix out = values[node.inputs[0]];
            for (auto& v : out.data()) {
              const std::int64_t k = v - op.table_lo;
              if (!op.table.empty()) {
                if (k < 0 || k >= static_cast<std::int64_t>(op.table.size())) {
                  throw OverflowError(id, node.name + ": value " +
                                              std::to_string(v) +
                                              " outside the table domain");
                }
                v = op.table[k];
              } else {
                v = Quantize(op.fn(in.Real(v)), node.out.params);
              }
            }
            return out;
          },
          [&](const GroupSumOp& op) {
            const IntMatrix c = centered(node.inputs[0]);
            IntMatrix out(c.rows(), op.groups.size());
            for (std::size_t m = 0; m < c.rows(); ++m) {
              for (std::size_t g = 0; g < op.groups.size(); ++g) {
                std::int64_t acc = 0;
                for (int ch : op.groups[g]) acc += c(m, ch);
                out(m, g) = acc;
              }
            }
            return out;
          },
          [&](const ReduceSumOp& op) {
            const IntMatrix c = centered(node.inputs[0]);
            if (op.axis == ReduceAxis::kTime) {
              IntMatrix out(1, c.cols());
              for (std::size_t m = 0; m < c.rows(); ++m) {
                for (std::size_t k = 0; k < c.cols(); ++k) out(0, k) += c(m, k);
              }
              return out;
            }
            IntMatrix out(c.rows(), 1);
            for (std::size_t m = 0; m < c.rows(); ++m) {
              for (std::size_t k = 0; k < c.cols(); ++k) out(m, 0) += c(m, k);
            }
            return out;
          },
          [&](const SubtractOp&) {
            const IntMatrix& a = values[node.inputs[0]];
            const IntMatrix& b = values[node.inputs[1]];
            IntMatrix out(a.rows(), a.cols());
            for (std::size_t m = 0; m < a.rows(); ++m) {
              for (std::size_t k = 0; k < a.cols(); ++k) {
                out(m, k) = a(m, k) - b(0, k);
              }
            }
            return out;
          },
          [&](const ConcatOp&) {
            const std::size_t rows = values[node.inputs[0]].rows();
            IntMatrix out(rows, node.out.channels);
            std::size_t offset = 0;
            for (int input : node.inputs) {
              const IntMatrix& v = values[input];
              for (std::size_t m = 0; m < rows; ++m) {
                for (std::size_t k = 0; k < v.cols(); ++k) {
                  out(m, offset + k) = v(m, k);
                }
              }
              offset += v.cols();
            }
            return out;
          },
      },
      node.op);
}

// Checks the executed values against the edge and returns the bit width they
// actually needed.
int ObservedBits(const CircuitGraph& graph, int id, const IntMatrix& values) {
  const Node& node = graph.node(id);
  const EdgeSpec& e = node.out;
  if (values.empty()) return 0;
  const auto [lo_it, hi_it] =
      std::minmax_element(values.data().begin(), values.data().end());
  const std::int64_t lo = *lo_it, hi = *hi_it;
  if (e.quantized()) {
    if (lo < e.params.Min() || hi > e.params.Max()) {
      throw OverflowError(id, node.name + ": value outside the " +
                                  std::to_string(e.bits) + "-bit range");
    }
    return e.params.is_signed ? SignedBitLength(lo, hi)
                              : UnsignedBitLength(static_cast<std::uint64_t>(hi));
  }
  const std::int64_t peak = std::max(std::abs(lo), std::abs(hi));
  if (peak > e.worst_abs) {
    throw OverflowError(id, node.name + ": |value| " + std::to_string(peak) +
                                " exceeds the declared worst case " +
                                std::to_string(e.worst_abs));
  }
  return MagnitudeBits(static_cast<std::uint64_t>(peak));
}

void CheckInputLength(const CircuitGraph& graph, std::span<const double> x) {
  if (graph.empty()) throw std::invalid_argument("empty circuit");
  if (graph.fixed_length() && x.size() != graph.input_length()) {
    throw std::invalid_argument(
        "circuit is built for inputs of " +
        std::to_string(graph.input_length()) + " samples, got " +
        std::to_string(x.size()));
  }
}

}  // namespace

ExecutionResult Execute(const CircuitGraph& graph, std::span<const double> x) {
  CheckInputLength(graph, x);
  ExecutionResult result;
  result.values.reserve(graph.nodes().size());
  for (std::size_t i = 0; i < graph.nodes().size(); ++i) {
    const int id = static_cast<int>(i);
    result.values.push_back(ExecuteNode(graph, id, result.values, x));
    result.observed_bits.push_back(ObservedBits(graph, id, result.values.back()));
  }
  return result;
}

RealMatrix DequantizeOutput(const CircuitGraph& graph, const IntMatrix& out) {
  const EdgeSpec& e = graph.node(graph.output()).out;
  RealMatrix real(out.rows(), out.cols());
  for (std::size_t i = 0; i < out.size(); ++i) real.data()[i] = e.Real(out.data()[i]);
  return real;
}

void MergeObserved(AccumulatorReport& report, const ExecutionResult& result) {
  for (NodeBudget& n : report.nodes) {
    if (static_cast<std::size_t>(n.node) < result.observed_bits.size()) {
      n.observed_max_bits =
          std::max(n.observed_max_bits, result.observed_bits[n.node]);
    }
  }
}

// ---------------------------------------------------------------------------
// Floating-point simulation with inserted quantizers.

namespace {

struct FloatValue {
  RealMatrix real;
  IntMatrix ints;  // quantized edges only
};

FloatValue FloatNode(const CircuitGraph& graph, int id,
                     const std::vector<const RealMatrix*>& inputs,
                     std::span<const double> x) {
  const Node& node = graph.node(id);
  FloatValue out;
  auto quantize_raw = [&](RealMatrix raw) {
    out.ints = IntMatrix(raw.rows(), raw.cols());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const std::int64_t q = Quantize(raw.data()[i], node.out.params);
      out.ints.data()[i] = q;
      raw.data()[i] = Dequantize(q, node.out.params);
    }
    out.real = std::move(raw);
  };
  std::visit(
      Overloaded{
          [&](const InputOp&) {
            RealMatrix raw(1, x.size());
            std::copy(x.begin(), x.end(), raw.data().begin());
            quantize_raw(std::move(raw));
          },
          [&](const ConvOp& op) {
            const RealMatrix& in = *inputs[0];
            RealMatrix w(op.weights.rows(), op.weights.cols());
            for (std::size_t i = 0; i < w.size(); ++i) {
              w.data()[i] = Dequantize(op.weights.data()[i], op.weight_params);
            }
            if (op.mode == ConvMode::kTemporal) {
              const std::size_t length = w.cols();
              if (in.cols() < length) {
                throw std::invalid_argument("signal shorter than one frame");
              }
              const std::size_t frames = (in.cols() - length) / op.stride + 1;
              out.real = RealMatrix(frames, w.rows());
              for (std::size_t m = 0; m < frames; ++m) {
                for (std::size_t r = 0; r < w.rows(); ++r) {
                  double acc = 0.0;
                  for (std::size_t n = 0; n < length; ++n) {
                    acc += w(r, n) * in(0, m * op.stride + n);
                  }
                  out.real(m, r) = acc;
                }
              }
            } else {
              out.real = RealMatrix(in.rows(), w.rows());
              for (std::size_t m = 0; m < in.rows(); ++m) {
                for (std::size_t r = 0; r < w.rows(); ++r) {
                  double acc = 0.0;
                  for (std::size_t i = 0; i < w.cols(); ++i) {
                    acc += w(r, i) * in(m, i);
                  }
                  out.real(m, r) = acc;
                }
              }
            }
          },
          [&](const LutOp& op) {
            RealMatrix raw = *inputs[0];
            for (double& v : raw.data()) {
              if (op.exact) {
                v = op.fn.kind == LutKind::kAbs ? std::abs(v) : v * v;
              } else {
                v = op.fn(v);
              }
            }
            if (op.exact) {
              out.real = std::move(raw);
            } else {
              quantize_raw(std::move(raw));
            }
          },
          [&](const GroupSumOp& op) {
            const RealMatrix& in = *inputs[0];
            out.real = RealMatrix(in.rows(), op.groups.size());
            for (std::size_t m = 0; m < in.rows(); ++m) {
              for (std::size_t g = 0; g < op.groups.size(); ++g) {
                double acc = 0.0;
                for (int ch : op.groups[g]) acc += in(m, ch);
                out.real(m, g) = acc;
              }
            }
          },
          [&](const ReduceSumOp& op) {
            const RealMatrix& in = *inputs[0];
            if (op.axis == ReduceAxis::kTime) {
              out.real = RealMatrix(1, in.cols());
              for (std::size_t m = 0; m < in.rows(); ++m) {
                for (std::size_t k = 0; k < in.cols(); ++k) {
                  out.real(0, k) += in(m, k);
                }
              }
            } else {
              out.real = RealMatrix(in.rows(), 1);
              for (std::size_t m = 0; m < in.rows(); ++m) {
                for (std::size_t k = 0; k < in.cols(); ++k) {
                  out.real(m, 0) += in(m, k);
                }
              }
            }
          },
          [&](const SubtractOp&) {
            const RealMatrix& a = *inputs[0];
            const RealMatrix& b = *inputs[1];
            out.real = RealMatrix(a.rows(), a.cols());
            for (std::size_t m = 0; m < a.rows(); ++m) {
              for (std::size_t k = 0; k < a.cols(); ++k) {
                out.real(m, k) = a(m, k) - b(0, k);
              }
            }
          },
          [&](const ConcatOp&) {
            const std::size_t rows = inputs[0]->rows();
            RealMatrix raw(rows, node.out.channels);
            std::size_t offset = 0;
            for (const RealMatrix* v : inputs) {
              for (std::size_t m = 0; m < rows; ++m) {
                for (std::size_t k = 0; k < v->cols(); ++k) {
                  raw(m, offset + k) = (*v)(m, k);
                }
              }
              offset += v->cols();
            }
            // Inputs already sit on the shared grid; this re-derives the
            // integers from the reals.
            quantize_raw(std::move(raw));
          },
      },
      node.op);
  if (!node.out.quantized()) {
    // Accumulator reals are exact lattice points scale * v; rounding noise
    // from the float sums would otherwise decide exact LUT ties.
    for (double& v : out.real.data()) {
      v = node.out.scale * RoundHalfAway(v / node.out.scale);
    }
  }
  return out;
}

std::vector<const RealMatrix*> Gather(const std::vector<RealMatrix>& reals,
                                      const Node& node) {
  std::vector<const RealMatrix*> in;
  for (int id : node.inputs) in.push_back(&reals.at(id));
  return in;
}

}  // namespace

FloatSimulation SimulateFloat(const CircuitGraph& graph,
                              std::span<const double> x) {
  CheckInputLength(graph, x);
  FloatSimulation sim;
  for (std::size_t i = 0; i < graph.nodes().size(); ++i) {
    FloatValue v = FloatNode(graph, static_cast<int>(i),
                             Gather(sim.reals, graph.nodes()[i]), x);
    sim.reals.push_back(std::move(v.real));
    sim.ints.push_back(std::move(v.ints));
  }
  return sim;
}

std::vector<int> CompareWithFloat(const CircuitGraph& graph,
                                  const ExecutionResult& exec,
                                  const FloatSimulation& sim) {
  std::vector<int> mismatches;
  for (std::size_t i = 0; i < graph.nodes().size(); ++i) {
    if (!graph.nodes()[i].out.quantized()) continue;
    if (!(exec.values[i] == sim.ints[i])) {
      mismatches.push_back(static_cast<int>(i));
    }
  }
  return mismatches;
}

// ---------------------------------------------------------------------------
// Calibrated construction.

QuantizedWeights QuantizeWeights(const RealMatrix& weights, int bits) {
  QuantizedWeights out;
  out.params = WithExactZero(Calibrate(weights.data(), bits, true));
  out.values = IntMatrix(weights.rows(), weights.cols());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.values.data()[i] = Quantize(weights.data()[i], out.params);
  }
  return out;
}

RealMatrix BankMatrix(const KernelBank& bank) {
  RealMatrix w(bank.NumRows(), bank.length);
  for (std::size_t r = 0; r < bank.NumRows(); ++r) {
    std::copy(bank.rows[r].taps.begin(), bank.rows[r].taps.end(),
              w.row(r).begin());
  }
  return w;
}

CircuitBuilder::CircuitBuilder(std::vector<std::vector<double>> calibration)
    : calibration_(std::move(calibration)) {
  if (calibration_.empty()) throw std::invalid_argument("calibration set is empty");
  for (const auto& row : calibration_) {
    if (row.size() != calibration_[0].size()) {
      throw std::invalid_argument("calibration clips must share one length");
    }
  }
}

int CircuitBuilder::Track(int node) {
  const AccumulatorReport report = CheckBudget(graph_);
  if (!report.ok()) throw BudgetViolation(report);
  std::vector<RealMatrix> per_clip;
  per_clip.reserve(calibration_.size());
  for (std::size_t c = 0; c < calibration_.size(); ++c) {
    std::vector<const RealMatrix*> inputs;
    for (int id : graph_.node(node).inputs) inputs.push_back(&values_[id][c]);
    per_clip.push_back(FloatNode(graph_, node, inputs, calibration_[c]).real);
  }
  values_.push_back(std::move(per_clip));
  return node;
}

int CircuitBuilder::Input(int bits, bool is_signed) {
  const QuantParams params =
      WithExactZero(Calibrate(calibration_, bits, is_signed));
  return Track(graph_.AddInput(params, calibration_[0].size()));
}

int CircuitBuilder::Conv(int input, ConvMode mode, const RealMatrix& weights,
                         int bits, int stride, const std::string& name) {
  const QuantizedWeights q = QuantizeWeights(weights, bits);
  return Track(graph_.AddConv(input, mode, q.values, q.params, stride, name));
}

std::vector<RealMatrix> CircuitBuilder::LutPreview(int input,
                                                   const LutFunction& fn) const {
  std::vector<RealMatrix> out = values_.at(input);
  for (RealMatrix& m : out) {
    for (double& v : m.data()) v = fn(v);
  }
  return out;
}

int CircuitBuilder::Lut(int input, const LutFunction& fn, int bits,
                        bool is_signed, const std::string& name) {
  std::vector<double> flat;
  for (const RealMatrix& m : LutPreview(input, fn)) {
    flat.insert(flat.end(), m.data().begin(), m.data().end());
  }
  const QuantParams params = WithExactZero(Calibrate(flat, bits, is_signed));
  return LutWithParams(input, fn, params, name);
}

int CircuitBuilder::LutWithParams(int input, const LutFunction& fn,
                                  const QuantParams& out,
                                  const std::string& name) {
  // Refuse before building a table over an oversized domain.
  const AccumulatorReport report = CheckBudget(graph_);
  if (!report.ok()) throw BudgetViolation(report);
  return Track(graph_.AddLut(input, fn, out, name));
}

int CircuitBuilder::ExactLut(int input, LutKind kind, const std::string& name) {
  return Track(graph_.AddExactLut(input, kind, name));
}

int CircuitBuilder::GroupSum(int input,
                             const std::vector<std::vector<int>>& groups,
                             const std::string& name) {
  return Track(graph_.AddGroupSum(input, groups, name));
}

int CircuitBuilder::ReduceSum(int input, ReduceAxis axis,
                              const std::string& name) {
  return Track(graph_.AddReduceSum(input, axis, name));
}

int CircuitBuilder::Subtract(int a, int b, const std::string& name) {
  return Track(graph_.AddSubtract(a, b, name));
}

int CircuitBuilder::Concat(const std::vector<int>& inputs,
                           const std::string& name) {
  return Track(graph_.AddConcat(inputs, name));
}

int CircuitBuilder::SquaredDeviationSum(int input, int bits,
                                        const std::string& prefix) {
  const EdgeSpec& in = graph_.node(input).out;
  const double frames = static_cast<double>(in.frames);
  const QuantParams grid = in.params;
  const int total = ReduceSum(input, ReduceAxis::kTime, prefix + ".sum");
  LutFunction mean_fn;
  mean_fn.pre_scale = 1.0 / frames;
  const int mean = LutWithParams(total, mean_fn, grid, prefix + ".mean");
  const int diff = Subtract(input, mean, prefix + ".dev");
  LutFunction square;
  square.kind = LutKind::kSquare;
  const int sq = Lut(diff, square, bits, false, prefix + ".dev2");
  return ReduceSum(sq, ReduceAxis::kTime, prefix + ".dev2_sum");
}

std::vector<std::vector<double>> CalibrationRows(
    std::span<const AudioBuffer> calibration) {
  if (calibration.empty()) throw std::invalid_argument("calibration set is empty");
  std::size_t length = std::numeric_limits<std::size_t>::max();
  for (const AudioBuffer& a : calibration) {
    a.Validate();
    length = std::min(length, a.samples.size());
  }
  std::vector<std::vector<double>> rows;
  for (const AudioBuffer& a : calibration) {
    rows.emplace_back(a.samples.begin(), a.samples.begin() + length);
  }
  return rows;
}

int AddFrontEnd(CircuitBuilder& builder, int input, TransformKind kind,
                const ApproxSpec& approx, const BitWidthConfig& bits,
                const TransformConfig& config, const std::string& prefix) {
  const KernelBank bank = FrontEndBank(kind, approx, config);
  const int conv = builder.Conv(input, ConvMode::kTemporal, BankMatrix(bank),
                                bits.weight, config.stft.hop, prefix + "conv");
  const int act =
      builder.Lut(conv, LutFunction{}, bits.intermediate, true, prefix + "act");
  const bool l1 = UsesL1Energy(approx);
  const int energy = builder.ExactLut(act, l1 ? LutKind::kAbs : LutKind::kSquare,
                                      prefix + (l1 ? "abs" : "square"));
  return builder.GroupSum(energy, bank.ChannelGroups(), prefix + "energy");
}

CircuitGraph BuildPipeline(const PipelineSpec& spec,
                           std::span<const AudioBuffer> calibration) {
  spec.bits.Validate();
  spec.config.Validate();
  CircuitBuilder b(CalibrationRows(calibration));
  const BitWidthConfig& bits = spec.bits;
  const int input = b.Input(bits.input);
  const int energy =
      AddFrontEnd(b, input, spec.transform, spec.approx, bits, spec.config, "");
  if (spec.transform == TransformKind::kStft ||
      spec.transform == TransformKind::kGammatone) {
    b.Lut(energy, LutFunction{}, bits.output, false, "output");
    return std::move(b.graph());
  }
  const int power =
      b.Lut(energy, LutFunction{}, bits.intermediate, false, "power");
  const RealMatrix fbank = MelFilterbank(spec.config.mel, spec.config.stft,
                                         spec.config.sample_rate_hz);
  const int mel =
      b.Conv(power, ConvMode::kChannel, fbank, bits.weight, 1, "mel");
  if (spec.transform == TransformKind::kMel) {
    b.Lut(mel, LutFunction{}, bits.output, false, "output");
    return std::move(b.graph());
  }
  LutFunction log_fn;
  log_fn.kind = LutKind::kLog;
  const int logmel = b.Lut(mel, log_fn, bits.intermediate, true, "logmel");
  const RealMatrix dct = DctMatrix(spec.config.mel.n_mels, spec.config.n_mfcc);
  const int cep = b.Conv(logmel, ConvMode::kChannel, dct, bits.weight, 1, "dct");
  b.Lut(cep, LutFunction{}, bits.output, true, "output");
  return std::move(b.graph());
}

Spectrogram RunPipeline(const CircuitGraph& graph, const AudioBuffer& x) {
  const ExecutionResult result = Execute(graph, x.samples);
  Spectrogram out;
  out.values = DequantizeOutput(graph, result.output());
  return out;
}

Spectrogram SimulateFheTransform(const AudioBuffer& x, const PipelineSpec& spec,
                                 std::span<const AudioBuffer> calibration) {
  return RunPipeline(BuildPipeline(spec, calibration), x);
}

}  // namespace qasp
