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

#ifndef SEDKIT_GRAD_CHECK_HPP_
#define SEDKIT_GRAD_CHECK_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sedkit/tape.hpp"
#include "sedkit/tensor.hpp"

namespace sedkit::ad {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t elements_checked = 0;
  // Location of the worst element, e.g. "input 1 [7]".
  std::string worst;
};

// Builds a graph on `tape` from leaves holding the inputs, in order.
using GraphFn = std::function<Var(Tape& tape, std::span<const Var> inputs)>;

// Compares reverse-mode gradients against central differences for every
// element of every input. Non-scalar outputs are reduced to a scalar with
// fixed pseudo-random weights in [0.5, 1.5] drawn from `seed`.
//
// Relative error per element: |analytic - numeric| / max(|analytic|,
// |numeric|, floor), where floor keeps near-zero gradients from dividing by
// round-off.
// eps must lie in [1e-7, 1e-3].
GradCheckReport grad_check(const GraphFn& fn, const std::vector<Tensor>& inputs,
                           double eps = 1e-5, std::uint64_t seed = 0,
                           double floor = 1e-6);

}  // namespace sedkit::ad

#endif  // SEDKIT_GRAD_CHECK_HPP_
