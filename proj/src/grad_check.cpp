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

#include "sedkit/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sedkit/error.hpp"
#include "sedkit/ops.hpp"

namespace sedkit::ad {

namespace {

// Runs fn on fresh leaves, reduces to a scalar, and returns the tape so the
// caller can read gradients.
struct Evaluation {
  double value = 0.0;
  Tape tape;
  std::vector<Var> leaves;
};

Evaluation evaluate(const GraphFn& fn, const std::vector<Tensor>& inputs,
                    std::vector<double>& weights, std::uint64_t seed,
                    bool differentiate) {
  Evaluation ev;
  for (const Tensor& t : inputs) ev.leaves.push_back(ev.tape.leaf(t));
  Var out = fn(ev.tape, ev.leaves);
  const std::size_t n = ev.tape.value(out).size();
  if (weights.empty()) {
    std::mt19937_64 rng(seed);
    weights.resize(n);
    for (double& w : weights) {
      w = 0.5 + static_cast<double>(rng() >> 11) * 0x1.0p-53;
    }
  }
  Var root = weighted_sum(ev.tape, out, weights);
  ev.value = ev.tape.value(root)[0];
  if (differentiate) ev.tape.backward(root);
  return ev;
}

}  // namespace

GradCheckReport grad_check(const GraphFn& fn, const std::vector<Tensor>& inputs,
                           double eps, std::uint64_t seed, double floor) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw ArgumentError("grad_check: eps must lie in [1e-7, 1e-3], got " +
                        std::to_string(eps));
  }
  std::vector<double> weights;
  Evaluation base = evaluate(fn, inputs, weights, seed, true);

  GradCheckReport report;
  std::vector<Tensor> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const std::vector<double> analytic = base.tape.grad(base.leaves[k]);
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double original = probe[k][i];
      probe[k][i] = original + eps;
      const double up = evaluate(fn, probe, weights, seed, false).value;
      probe[k][i] = original - eps;
      const double down = evaluate(fn, probe, weights, seed, false).value;
      probe[k][i] = original;

      const double numeric = (up - down) / (2.0 * eps);
      const double denom =
          std::max({std::abs(analytic[i]), std::abs(numeric), floor});
      const double rel = std::abs(analytic[i] - numeric) / denom;
      ++report.elements_checked;
      if (rel > report.max_rel_error || report.worst.empty()) {
        report.max_rel_error = std::max(report.max_rel_error, rel);
        if (rel >= report.max_rel_error) {
          report.worst =
              "input " + std::to_string(k) + " [" + std::to_string(i) + "]";
        }
      }
    }
  }
  return report;
}

}  // namespace sedkit::ad
