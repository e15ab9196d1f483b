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

#ifndef SEDKIT_TAPE_HPP_
#define SEDKIT_TAPE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "sedkit/tensor.hpp"

namespace sedkit::ad {

// Handle to a tensor recorded on a Tape. Only meaningful for the tape that
// issued it.
struct Var {
  std::uint32_t index = 0;
};

// Records executed primitives and replays their adjoints in exact reverse
// order. A tape is a single-threaded value: build one per forward pass.
class Tape {
 public:
  using Backward = std::function<void(Tape& tape, Var output)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  // Differentiable input.
  Var leaf(Tensor value);
  // Input that never receives a gradient.
  Var constant(Tensor value);

  const Tensor& value(Var v) const;
  const Shape& shape(Var v) const { return value(v).shape(); }
  bool requires_grad(Var v) const;

  // Gradient of the last backward() root with respect to v. Vars the root
  // does not depend on report zeros.
  std::vector<double> grad(Var v) const;
  // Adjoint accumulator used by op implementations; zero-filled on first use.
  std::span<double> grad_buffer(Var v);
  bool has_grad(Var v) const;

  // Appends an op output. `backward` is kept only when an input needs a
  // gradient; inputs must already be on this tape.
  Var record(Tensor output, std::initializer_list<Var> inputs,
             Backward backward);

  // Seeds d(root)/d(root) = 1 and runs recorded adjoints newest-first.
  // root must hold a single element.
  void backward(Var root);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t op_count() const { return ops_.size(); }

 private:
  struct Node {
    Tensor tensor;
    bool requires_grad = false;
  };
  struct Op {
    Var output;
    Backward backward;
  };

  Var push(Tensor value, bool requires_grad);

  std::vector<Node> nodes_;
  std::vector<Op> ops_;
};

}  // namespace sedkit::ad

#endif  // SEDKIT_TAPE_HPP_
