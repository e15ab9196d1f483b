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

#include "sedkit/losses.hpp"

#include <cmath>
#include <string>

#include "sedkit/error.hpp"
#include "sedkit/ops.hpp"

namespace sedkit::loss {

using ad::Tape;
using ad::Var;

SceneTarget SceneTarget::one_hot(std::size_t scene, std::size_t num_scenes) {
  if (scene >= num_scenes) {
    throw ArgumentError("scene " + std::to_string(scene) + " outside [0, " +
                        std::to_string(num_scenes) + ")");
  }
  SceneTarget t;
  t.kind = Kind::kOneHot;
  t.probs.assign(num_scenes, 0.0);
  t.probs[scene] = 1.0;
  return t;
}

SceneTarget SceneTarget::soft(std::vector<double> probs) {
  if (probs.empty()) throw ArgumentError("empty scene distribution");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw ArgumentError("negative scene probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ArgumentError("scene distribution sums to " + std::to_string(total));
  }
  SceneTarget t;
  t.kind = Kind::kSoft;
  t.probs = std::move(probs);
  return t;
}

std::size_t SceneTarget::label() const {
  std::size_t ones = 0, index = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] == 1.0) {
      ++ones;
      index = i;
    } else if (probs[i] != 0.0) {
      throw ArgumentError("scene target is not one-hot");
    }
  }
  if (ones != 1) throw ArgumentError("scene target is not one-hot");
  return index;
}

void LossWeights::validate() const {
  if (!(alpha >= 0.0)) throw ArgumentError("alpha must be >= 0");
  if (!(beta >= 0.0)) throw ArgumentError("beta must be >= 0");
  if (!(temperature > 0.0)) throw ArgumentError("temperature must be > 0");
}

Var event_loss(Tape& tape, Var logits, const data::EventRoll& targets,
               std::span<const std::uint8_t> mask) {
  const Tensor& y = tape.value(logits);
  if (y.rank() != 2 || y.dim(0) != targets.classes() ||
      y.dim(1) != targets.frames()) {
    throw DimensionError("event_loss: logits " + shape_to_string(y.shape()) +
                         " vs targets [" + std::to_string(targets.classes()) +
                         "x" + std::to_string(targets.frames()) + "]");
  }
  const std::size_t m = y.dim(0), n = y.dim(1);
  if (!mask.empty() && mask.size() != n) {
    throw DimensionError("event_loss: mask has " + std::to_string(mask.size()) +
                         " entries for " + std::to_string(n) + " frames");
  }
  std::vector<std::uint8_t> valid(mask.begin(), mask.end());
  if (valid.empty()) valid.assign(n, 1);

  double total = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    for (std::size_t t = 0; t < n; ++t) {
      if (!valid[t]) continue;
      const double v = y.at(c, t);
      const double z = targets.at(c, t);
      total += std::max(v, 0.0) - v * z + std::log1p(std::exp(-std::abs(v)));
    }
  }
  return tape.record(
      Tensor({1}, {total}), {logits},
      [logits, targets, valid = std::move(valid), m, n](Tape& t, Var out) {
        const double g = t.value(out).grad()[0];
        const Tensor& y = t.value(logits);
        auto gy = t.grad_buffer(logits);
        for (std::size_t c = 0; c < m; ++c) {
          for (std::size_t k = 0; k < n; ++k) {
            if (!valid[k]) continue;
            gy[c * n + k] +=
                g * (ad::stable_sigmoid(y.at(c, k)) - targets.at(c, k));
          }
        }
      });
}

namespace {

// -sum_c p_c log softmax(w / T)_c and its gradient (q * sum(p) - p) / T.
Var scene_cross_entropy(Tape& tape, Var logits, std::vector<double> p,
                        double temperature) {
  const Tensor& w = tape.value(logits);
  if (w.size() != p.size()) {
    throw DimensionError("scene loss: " + std::to_string(w.size()) +
                         " logits for a target over " +
                         std::to_string(p.size()) + " scenes");
  }
  const std::vector<double> logq =
      ad::log_softmax_temperature(w.values(), temperature);
  double total = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) total -= p[c] * logq[c];
  return tape.record(
      Tensor({1}, {total}), {logits},
      [logits, p = std::move(p), logq, temperature](Tape& t, Var out) {
        const double g = t.value(out).grad()[0];
        double mass = 0.0;
        for (double v : p) mass += v;
        auto gw = t.grad_buffer(logits);
        for (std::size_t c = 0; c < p.size(); ++c) {
          gw[c] += g * (std::exp(logq[c]) * mass - p[c]) / temperature;
        }
      });
}

}  // namespace

Var scene_hard_loss(Tape& tape, Var logits, const SceneTarget& target) {
  target.label();  // throws unless one-hot
  return scene_cross_entropy(tape, logits, target.probs, 1.0);
}

std::vector<double> distill_targets(std::span<const double> teacher_logits,
                                    double temperature) {
  return ad::softmax_temperature(teacher_logits, temperature);
}

Var soft_scene_loss(Tape& tape, Var logits, std::span<const double> p,
                    double temperature) {
  if (!(temperature > 0.0)) {
    throw ArgumentError("temperature must be positive");
  }
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw ArgumentError("soft target has a negative entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw ArgumentError("soft target sums to " + std::to_string(total) +
                        ", expected 1");
  }
  return scene_cross_entropy(tape, logits, {p.begin(), p.end()}, temperature);
}

Var mtl_objective(Tape& tape, Var event, Var scene_hard, double alpha) {
  if (!(alpha >= 0.0)) throw ArgumentError("alpha must be >= 0");
  return ad::add_scaled(tape, event, scene_hard, alpha);
}

double mtl_objective(double event, double scene_hard, double alpha) {
  if (!(alpha >= 0.0)) throw ArgumentError("alpha must be >= 0");
  return event + alpha * scene_hard;
}

Var proposed_objective(Tape& tape, Var event, Var scene_soft, double beta) {
  if (!(beta >= 0.0)) throw ArgumentError("beta must be >= 0");
  return ad::add_scaled(tape, event, scene_soft, beta);
}

double proposed_objective(double event, double scene_soft, double beta) {
  if (!(beta >= 0.0)) throw ArgumentError("beta must be >= 0");
  return event + beta * scene_soft;
}

}  // namespace sedkit::loss
