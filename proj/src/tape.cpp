/* Copyright 2026 The sedkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "sedkit/tape.hpp"

#include <string>
#include <utility>

#include "sedkit/error.hpp"

namespace sedkit::ad {

Var Tape::push(Tensor value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), requires_grad});
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::leaf(Tensor value) { return push(std::move(value), true); }

Var Tape::constant(Tensor value) { return push(std::move(value), false); }

const Tensor& Tape::value(Var v) const {
  if (v.index >= nodes_.size()) {
    throw ArgumentError("var " + std::to_string(v.index) +
                        " does not belong to this tape");
  }
  return nodes_[v.index].tensor;
}

bool Tape::requires_grad(Var v) const {
  value(v);
  return nodes_[v.index].requires_grad;
}

bool Tape::has_grad(Var v) const { return value(v).has_grad(); }

std::vector<double> Tape::grad(Var v) const {
  const Tensor& t = value(v);
  if (!t.has_grad()) return std::vector<double>(t.size(), 0.0);
  auto g = t.grad();
  return {g.begin(), g.end()};
}

std::span<double> Tape::grad_buffer(Var v) {
  value(v);
  return nodes_[v.index].tensor.grad();
}

Var Tape::record(Tensor output, std::initializer_list<Var> inputs,
                 Backward backward) {
  bool needs = false;
  for (Var in : inputs) {
    if (in.index >= nodes_.size()) {
      throw ArgumentError("op input " + std::to_string(in.index) +
                          " is not on the tape");
    }
    needs = needs || nodes_[in.index].requires_grad;
  }
  Var out = push(std::move(output), needs);
  if (needs) ops_.push_back(Op{out, std::move(backward)});
  return out;
}

void Tape::backward(Var root) {
  if (value(root).size() != 1) {
    throw DimensionError("backward root must be a single element, got " +
                         shape_to_string(value(root).shape()));
  }
  for (Node& n : nodes_) n.tensor.drop_grad();
  nodes_[root.index].tensor.grad()[0] = 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    if (it->output.index > root.index) continue;
    if (!nodes_[it->output.index].tensor.has_grad()) continue;
    it->backward(*this, it->output);
  }
}

}  // namespace sedkit::ad
