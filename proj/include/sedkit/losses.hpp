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

#ifndef SEDKIT_LOSSES_HPP_
#define SEDKIT_LOSSES_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sedkit/dataset.hpp"
#include "sedkit/tape.hpp"

namespace sedkit::loss {

// Clip-level scene supervision: a one-hot label or a teacher distribution.
struct SceneTarget {
  enum class Kind { kOneHot, kSoft };

  Kind kind = Kind::kOneHot;
  std::vector<double> probs;

  static SceneTarget one_hot(std::size_t scene, std::size_t num_scenes);
  // Throws ArgumentError unless probs is a distribution within 1e-9.
  static SceneTarget soft(std::vector<double> probs);

  // Index of the 1 in a one-hot target.
  std::size_t label() const;
};

struct LossWeights {
  double alpha = 0.0;        // hard scene loss weight
  double beta = 0.0;         // soft scene loss weight
  double temperature = 1.0;  // shared by teacher targets and student q

  void validate() const;
};

// Sigmoid cross-entropy summed over classes and valid frames, in the stable
// logit form max(y, 0) - y z + log(1 + exp(-|y|)).
// logits [M x N]; mask has N entries (empty means every frame is valid).
ad::Var event_loss(ad::Tape& tape, ad::Var logits, const data::EventRoll& targets,
                   std::span<const std::uint8_t> mask = {});

// -log softmax(logits)[label] for a one-hot target.
ad::Var scene_hard_loss(ad::Tape& tape, ad::Var logits,
                        const SceneTarget& target);

// Soft labels from frozen teacher logits: softmax(v / T). Plain numbers, so
// no gradient can reach the teacher.
std::vector<double> distill_targets(std::span<const double> teacher_logits,
                                    double temperature);

// -sum_c p_c log q_c with q = softmax(logits / T). p must sum to 1 within
// 1e-6. No T^2 rescaling is applied.
ad::Var soft_scene_loss(ad::Tape& tape, ad::Var logits,
                        std::span<const double> p, double temperature);

// E1 + alpha * E2
ad::Var mtl_objective(ad::Tape& tape, ad::Var event, ad::Var scene_hard,
                      double alpha);
double mtl_objective(double event, double scene_hard, double alpha);

// E1 + beta * E3
ad::Var proposed_objective(ad::Tape& tape, ad::Var event, ad::Var scene_soft,
                           double beta);
double proposed_objective(double event, double scene_soft, double beta);

}  // namespace sedkit::loss

#endif  // SEDKIT_LOSSES_HPP_
