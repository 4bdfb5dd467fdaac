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


#include "json.hpp"

#include "qasp/circuit.h"

namespace qasp {

namespace {

using nlohmann::ordered_json;

ordered_json ParamsJson(const QuantParams& p) {
  return {{"alpha", p.alpha},
          {"beta", p.beta},
          {"bits", p.bits},
          {"signed", p.is_signed}};
}

ordered_json EdgeJson(const EdgeSpec& e) {
  ordered_json j;
  j["kind"] = e.quantized() ? "quantized" : "accumulator";
  if (e.quantized()) {
    j["params"] = ParamsJson(e.params);
  } else {
    j["scale"] = e.scale;
  }
  j["bits"] = e.bits;
  j["worst_abs"] = e.worst_abs;
  j["frames"] = e.frames;
  j["channels"] = e.channels;
  return j;
}

}  // namespace

std::string CircuitToJson(const CircuitGraph& graph, bool include_weights) {
  ordered_json doc;
  doc["format"] = "qasp-circuit";
  doc["version"] = 1;
  doc["input_length"] = graph.input_length();
  doc["fixed_length"] = graph.fixed_length();
  doc["output"] = graph.empty() ? -1 : graph.output();
  ordered_json nodes = ordered_json::array();
  for (std::size_t i = 0; i < graph.nodes().size(); ++i) {
    const Node& n = graph.nodes()[i];
    ordered_json j;
    j["id"] = i;
    j["name"] = n.name;
    j["kind"] = n.KindName();
    j["inputs"] = n.inputs;
    j["edge"] = EdgeJson(n.out);
    if (const auto* conv = std::get_if<ConvOp>(&n.op)) {
      j["stride"] = conv->stride;
      j["weight_params"] = ParamsJson(conv->weight_params);
      j["kernel_shape"] = {conv->weights.rows(), conv->weights.cols()};
      j["max_taps"] = conv->max_taps;
      if (include_weights) j["weights"] = conv->weights.data();
    } else if (const auto* lut = std::get_if<LutOp>(&n.op)) {
      j["function"] = {{"kind", LutKindName(lut->fn.kind)},
                       {"pre_scale", lut->fn.pre_scale},
                       {"center", lut->fn.center},
                       {"norm", lut->fn.norm}};
      j["table_size"] = lut->table.size();
    } else if (const auto* group = std::get_if<GroupSumOp>(&n.op)) {
      j["groups"] = group->groups;
    }
    nodes.push_back(std::move(j));
  }
  doc["nodes"] = std::move(nodes);
  return doc.dump(2);
}

}  // namespace qasp
