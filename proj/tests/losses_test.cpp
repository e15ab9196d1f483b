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

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "sedkit/error.hpp"
#include "sedkit/grad_check.hpp"
#include "sedkit/losses.hpp"
#include "sedkit/ops.hpp"
#include "test_util.hpp"

using namespace sedkit;
using namespace sedkit::ad;
using namespace sedkit::loss;
using sedkit::testing::entropy;
using sedkit::testing::random_tensor;

namespace {

double scalar(const Tape& tape, Var v) { return tape.value(v)[0]; }

// Naive BCE via probabilities, independent of the logit form.
double naive_bce(double y, int z) {
  const double s = 1.0 / (1.0 + std::exp(-y));
  return -(z * std::log(s) + (1 - z) * std::log(1.0 - s));
}

double naive_cross_entropy(const std::vector<double>& w,
                           const std::vector<double>& p, double t) {
  double norm = 0.0;
  for (double x : w) norm += std::exp(x / t);
  double loss = 0.0;
  for (std::size_t c = 0; c < w.size(); ++c) {
    loss -= p[c] * std::log(std::exp(w[c] / t) / norm);
  }
  return loss;
}

}  // namespace

TEST_CASE("event loss examples") {
  for (int z : {0, 1}) {
    Tape tape;
    data::EventRoll roll(1, 1, 0.02);
    roll.set(0, 0, z == 1);
    Var y = tape.constant(Tensor({1, 1}, 0.0));
    CHECK(scalar(tape, event_loss(tape, y, roll)) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  Tape tape;
  data::EventRoll roll(1, 1, 0.02);
  roll.set(0, 0, true);
  Var y = tape.constant(Tensor({1, 1}, std::log(9.0)));  // sigmoid = 0.9
  CHECK(scalar(tape, event_loss(tape, y, roll)) ==
        doctest::Approx(-std::log(0.9)).epsilon(1e-12));
  CHECK(-std::log(0.9) == doctest::Approx(0.10536).epsilon(1e-4));
}

TEST_CASE("event loss matches naive sum and respects mask") {
  std::mt19937_64 rng(3);
  const std::size_t m = 3, n = 7;
  Tensor logits = random_tensor({m, n}, rng, -4, 4);
  data::EventRoll roll(m, n, 0.02);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) roll.set(i, j, (rng() & 1) != 0);
  }
  std::vector<std::uint8_t> mask{1, 1, 1, 1, 0, 0, 0};
  double expected_all = 0.0, expected_masked = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double l = naive_bce(logits.at(i, j), roll.at(i, j));
      expected_all += l;
      if (mask[j]) expected_masked += l;
    }
  }
  Tape tape;
  Var y = tape.constant(logits);
  CHECK(scalar(tape, event_loss(tape, y, roll)) ==
        doctest::Approx(expected_all).epsilon(1e-10));
  const double masked = scalar(tape, event_loss(tape, y, roll, mask));
  CHECK(masked == doctest::Approx(expected_masked).epsilon(1e-10));

  Tensor perturbed = logits;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 4; j < n; ++j) perturbed.at(i, j) += 100.0 * (rng() % 7);
  }
  Tape tape2;
  CHECK(scalar(tape2, event_loss(tape2, tape2.constant(perturbed), roll, mask)) ==
        masked);

  // Extreme logits stay finite.
  Tape tape3;
  Tensor big({m, n}, 800.0);
  CHECK(std::isfinite(scalar(tape3, event_loss(tape3, tape3.constant(big), roll))));
}

TEST_CASE("event loss shape errors") {
  Tape tape;
  data::EventRoll roll(2, 3, 0.02);
  CHECK_THROWS_AS(event_loss(tape, tape.constant(Tensor({3, 2})), roll),
                  DimensionError);
  std::vector<std::uint8_t> mask{1, 1};
  CHECK_THROWS_AS(event_loss(tape, tape.constant(Tensor({2, 3})), roll, mask),
                  DimensionError);
}

TEST_CASE("scene hard loss examples") {
  Tape tape;
  CHECK(scalar(tape, scene_hard_loss(tape, tape.constant(Tensor({4}, 0.3)),
                                     SceneTarget::one_hot(2, 4))) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
  const double l = scalar(tape, scene_hard_loss(tape, tape.constant(Tensor::vector({1, 2})),
                                                SceneTarget::one_hot(1, 2)));
  CHECK(l == doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-12));
  CHECK(l == doctest::Approx(0.31326).epsilon(1e-4));
  const double limit = scalar(tape, scene_hard_loss(tape, tape.constant(Tensor::vector({1000, 0})),
                                                    SceneTarget::one_hot(0, 2)));
  CHECK(limit == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(scene_hard_loss(tape, tape.constant(Tensor::vector({1, 2})),
                                  SceneTarget::soft({0.5, 0.5})),
                  ArgumentError);
  CHECK_THROWS_AS(scene_hard_loss(tape, tape.constant(Tensor::vector({1, 2, 3})),
                                  SceneTarget::one_hot(0, 2)),
                  DimensionError);
}

TEST_CASE("scene targets validate") {
  CHECK_THROWS_AS(SceneTarget::soft({0.5, 0.6}), ArgumentError);
  CHECK_THROWS_AS(SceneTarget::soft({1.5, -0.5}), ArgumentError);
  CHECK_THROWS_AS(SceneTarget::one_hot(4, 4), ArgumentError);
  CHECK(SceneTarget::one_hot(2, 4).label() == 2);
  CHECK_THROWS_AS(SceneTarget::soft({0.5, 0.5}).label(), ArgumentError);
  LossWeights w;
  w.temperature = 0.0;
  CHECK_THROWS_AS(w.validate(), ArgumentError);
  w.temperature = 1.0;
  w.alpha = -1.0;
  CHECK_THROWS_AS(w.validate(), ArgumentError);
}

TEST_CASE("distillation targets") {
  auto p = distill_targets(std::vector<double>{3, 3, 3, 3}, 2.0);
  for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
  p = distill_targets(std::vector<double>{1, 2}, 1.0);
  CHECK(p[0] == doctest::Approx(0.26894).epsilon(1e-4));
  CHECK(p[1] == doctest::Approx(0.73106).epsilon(1e-4));
  p = distill_targets(std::vector<double>{1, 2}, 1000.0);
  CHECK(std::abs(p[0] - 0.5) < 1e-3);
  CHECK_THROWS_AS(distill_targets(std::vector<double>{1, 2}, 0.0), ArgumentError);
}

TEST_CASE("soft scene loss examples") {
  Tape tape;
  const std::vector<double> uniform(4, 0.25);
  CHECK(scalar(tape, soft_scene_loss(tape, tape.constant(Tensor({4}, 1.0)), uniform, 1.0)) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
  const std::vector<double> p{0.3, 0.7};
  const double l = scalar(tape, soft_scene_loss(tape, tape.constant(Tensor::vector({1, 2})), p, 1.0));
  CHECK(l == doctest::Approx(naive_cross_entropy({1, 2}, p, 1.0)).epsilon(1e-12));
  CHECK(l == doctest::Approx(0.61311).epsilon(1e-4));
  CHECK_THROWS_AS(soft_scene_loss(tape, tape.constant(Tensor::vector({1, 2})),
                                  std::vector<double>{0.3, 0.6}, 1.0),
                  ArgumentError);
}

TEST_CASE("soft loss with one-hot target equals hard loss") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor w = random_tensor({4}, rng, -5, 5);
    const std::size_t label = rng() % 4;
    auto target = SceneTarget::one_hot(label, 4);
    Tape tape;
    Var wv = tape.constant(w);
    const double hard = scalar(tape, scene_hard_loss(tape, wv, target));
    const double soft = scalar(tape, soft_scene_loss(tape, wv, target.probs, 1.0));
    CHECK(std::abs(hard - soft) <= 1e-12);
  }
}

TEST_CASE("soft loss is bounded below by target entropy") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> temp(0.5, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    Tensor w = random_tensor({4}, rng, -3, 3);
    Tensor raw = random_tensor({4}, rng, 0.05, 1.0);
    std::vector<double> p(raw.values().begin(), raw.values().end());
    double s = 0.0;
    for (double v : p) s += v;
    for (double& v : p) v /= s;
    const double t = temp(rng);
    Tape tape;
    const double loss = scalar(tape, soft_scene_loss(tape, tape.constant(w), p, t));
    CHECK(loss >= entropy(p) - 1e-12);

    // q == p gives equality: w = T log p.
    Tensor matched({4});
    for (std::size_t c = 0; c < 4; ++c) matched[c] = t * std::log(p[c]);
    const double eq = scalar(tape, soft_scene_loss(tape, tape.constant(matched), p, t));
    CHECK(std::abs(eq - entropy(p)) <= 1e-9);
  }
}

TEST_CASE("loss gradients match finite differences") {
  std::mt19937_64 rng(21);
  data::EventRoll roll(2, 5, 0.02);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 5; ++j) roll.set(i, j, (i + j) % 2 == 0);
  }
  std::vector<std::uint8_t> mask{1, 1, 1, 0, 1};
  Tensor y = random_tensor({2, 5}, rng, -3, 3);
  auto r1 = grad_check(
      [&](Tape& t, std::span<const Var> in) { return event_loss(t, in[0], roll, mask); },
      {y});
  CHECK(r1.max_rel_error < 1e-6);

  Tensor w = random_tensor({4}, rng, -2, 2);
  auto r2 = grad_check(
      [&](Tape& t, std::span<const Var> in) {
        return scene_hard_loss(t, in[0], SceneTarget::one_hot(1, 4));
      },
      {w});
  CHECK(r2.max_rel_error < 1e-6);

  const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  for (double t : {0.5, 1.0, 3.0}) {
    auto r3 = grad_check(
        [&](Tape& tp, std::span<const Var> in) { return soft_scene_loss(tp, in[0], p, t); },
        {w});
    CHECK(r3.max_rel_error < 1e-6);
  }

  auto r4 = grad_check(
      [&](Tape& tp, std::span<const Var> in) {
        Var e1 = event_loss(tp, in[0], roll, mask);
        Var e3 = soft_scene_loss(tp, in[1], p, 2.0);
        return proposed_objective(tp, e1, e3, 0.7);
      },
      {y, w});
  CHECK(r4.max_rel_error < 1e-6);
}

TEST_CASE("soft loss gradient has the closed form (q - p) / T") {
  const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  Tensor w = Tensor::vector({0.5, -1.0, 2.0, 0.0});
  const double t = 2.5;
  Tape tape;
  Var wv = tape.leaf(w);
  tape.backward(soft_scene_loss(tape, wv, p, t));
  const auto q = softmax_temperature(w.values(), t);
  const auto g = tape.grad(wv);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(g[c] == doctest::Approx((q[c] - p[c]) / t).epsilon(1e-12));
  }
}

TEST_CASE("objective combinations") {
  CHECK(mtl_objective(1.0, 2.0, 0.0) == 1.0);
  CHECK(mtl_objective(1.0, 2.0, 0.0001) == doctest::Approx(1.0002).epsilon(1e-12));
  CHECK(mtl_objective(1.0, 2.0, 1.0) == 3.0);
  CHECK(proposed_objective(1.0, 0.5, 1.0) == 1.5);
  CHECK(proposed_objective(1.0, 0.5, 0.0) == 1.0);

  for (double weight : {0.0, 0.5, 2.0}) {
    Tape tape;
    Var e1 = tape.leaf(Tensor({1}, 1.25));
    Var e2 = tape.leaf(Tensor({1}, 0.75));
    Var m = mtl_objective(tape, e1, e2, weight);
    CHECK(scalar(tape, m) == doctest::Approx(1.25 + weight * 0.75).epsilon(1e-15));
    tape.backward(m);
    CHECK(tape.grad(e1)[0] == 1.0);
    CHECK(tape.grad(e2)[0] == weight);
    Var pr = proposed_objective(tape, e1, e2, weight);
    CHECK(scalar(tape, pr) == mtl_objective(1.25, 0.75, weight));
  }
}
