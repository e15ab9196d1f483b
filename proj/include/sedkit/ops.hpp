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

#ifndef SEDKIT_OPS_HPP_
#define SEDKIT_OPS_HPP_

#include <span>
#include <vector>

#include "sedkit/tape.hpp"
#include "sedkit/tensor.hpp"

// Differentiable primitives. Every op records its output on the tape and,
// when an input needs a gradient, an adjoint that accumulates into the
// inputs' gradient buffers.
namespace sedkit::ad {

// [P x Q] . [Q x R] -> [P x R]
Var matmul(Tape& tape, Var a, Var b);

// x [N x F], weights [F x O], bias [O] -> [N x O]
Var dense(Tape& tape, Var x, Var weights, Var bias);

// Same-padded 3x3 cross-correlation.
// x [Cin x H x W], kernel [Cout x Cin x 3 x 3], bias [Cout] -> [Cout x H x W]
Var conv2d(Tape& tape, Var x, Var kernel, Var bias);

// Max over pool_h x pool_w windows; trailing partial windows are pooled over
// their valid extent. Ties route the gradient to the first maximal element.
// x [C x H x W] -> [C x ceil(H/pool_h) x ceil(W/pool_w)]
Var maxpool2d(Tape& tape, Var x, int pool_h, int pool_w);

// Mean over the spatial axes: [C x H x W] -> [1 x C].
Var global_mean_pool(Tape& tape, Var x);

Var relu(Tape& tape, Var x);
Var sigmoid(Tape& tape, Var x);
Var tanh(Tape& tape, Var x);

// Softmax of logits / temperature over all elements of x.
Var softmax_temperature(Tape& tape, Var logits, double temperature);

Var reshape(Tape& tape, Var x, Shape shape);
Var transpose(Tape& tape, Var x);

// Scalar sum of all elements -> [1].
Var sum(Tape& tape, Var x);
// Scalar sum_i weights[i] * x[i] with constant weights -> [1].
Var weighted_sum(Tape& tape, Var x, std::span<const double> weights);
// a + weight * b, elementwise over equal shapes.
Var add_scaled(Tape& tape, Var a, Var b, double weight);

// One direction of a GRU layer.
//   input_weights     [F x 3U]   columns ordered (update, reset, candidate)
//   recurrent_weights [U x 3U]
//   bias              [3U]
struct GruWeights {
  Var input_weights;
  Var recurrent_weights;
  Var bias;
};

// Bidirectional GRU over x [N x F] with zero initial state. Each direction
// uses the reset-before-candidate cell:
//   z = sigmoid(x Wz + h Uz + bz)
//   r = sigmoid(x Wr + h Ur + br)
//   c = tanh(x Wc + (r * h) Uc + bc)
//   h' = (1 - z) * c + z * h
// Output row n is [forward h_n, backward h_n], shape [N x 2U].
Var bigru(Tape& tape, Var x, const GruWeights& forward,
          const GruWeights& backward);

// Plain numeric helpers shared with losses and distillation.
double stable_sigmoid(double x);
std::vector<double> softmax_temperature(std::span<const double> logits,
                                        double temperature);
std::vector<double> log_softmax_temperature(std::span<const double> logits,
                                            double temperature);

}  // namespace sedkit::ad

#endif  // SEDKIT_OPS_HPP_
