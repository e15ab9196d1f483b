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
#include <set>
#include <vector>

#include "doctest.h"
#include "fixture_util.hpp"
#include "sedkit/error.hpp"
#include "sedkit/losses.hpp"
#include "sedkit/ops.hpp"
#include "sedkit/training.hpp"
#include "test_util.hpp"

using namespace sedkit;
using namespace sedkit::train;
using sedkit::testing::entropy;

namespace {

const Dataset& fixture_dataset() {
  static const Dataset ds = [] {
    auto f = sedkit::testing::prepare_fixture(sedkit::testing::scratch_dir("training"));
    return sedkit::testing::load_fixture_dataset(f);
  }();
  return ds;
}

TrainConfig tiny(Mode mode) {
  TrainConfig c = cli::fixture_student_config(mode);
  c.network.conv_channels = {4, 4, 4};
  c.network.scene_channels = {4, 4};
  c.network.gru_units = 4;
  c.network.event_dense = 4;
  c.max_epochs = 3;
  c.patience = 100;
  c.batch_size = 3;
  return c;
}

TrainConfig tiny_teacher() {
  TrainConfig c = cli::fixture_teacher_config();
  c.network.conv_channels = {4, 4, 4};
  c.max_epochs = 3;
  return c;
}

nn::ModelParams single(const std::vector<double>& v) {
  nn::ModelParams p;
  p.add("w", Tensor::vector(v));
  return p;
}

}  // namespace

TEST_CASE("adam update") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    nn::ModelParams p = single({1.0, -2.0});
    AdamState s = AdamState::for_params(p);
    adam_step(p, p.zeros_like(), s);
    CHECK(p.at("w")[0] == 1.0);
    CHECK(p.at("w")[1] == -2.0);
    CHECK(s.step == 1);
  }
  SUBCASE("first step moves by lr * sign(g)") {
    nn::ModelParams p = single({0.0, 0.0, 0.0});
    nn::ModelParams g = single({3.0, -0.01, 250.0});
    AdamState s = AdamState::for_params(p);
    adam_step(p, g, s, {1e-3});
    CHECK(p.at("w")[0] == doctest::Approx(-1e-3).epsilon(1e-6));
    CHECK(p.at("w")[1] == doctest::Approx(1e-3).epsilon(1e-5));
    CHECK(p.at("w")[2] == doctest::Approx(-1e-3).epsilon(1e-6));
  }
  SUBCASE("matches a scalar recurrence") {
    nn::ModelParams p = single({0.5});
    AdamState s = AdamState::for_params(p);
    double x = 0.5, m = 0.0, v = 0.0;
    const double grads[] = {0.3, -1.2, 0.7, 0.05};
    for (int t = 1; t <= 4; ++t) {
      const double g = grads[t - 1];
      adam_step(p, single({g}), s, {0.01});
      m = 0.9 * m + 0.1 * g;
      v = 0.999 * v + 0.001 * g * g;
      x -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
      CHECK(p.at("w")[0] == doctest::Approx(x).epsilon(1e-14));
    }
  }
  SUBCASE("deterministic") {
    nn::ModelParams a = single({0.1, 0.2}), b = single({0.1, 0.2});
    AdamState sa = AdamState::for_params(a), sb = AdamState::for_params(b);
    for (int i = 0; i < 5; ++i) {
      adam_step(a, single({0.3, -0.7}), sa);
      adam_step(b, single({0.3, -0.7}), sb);
    }
    CHECK(a.checksum() == b.checksum());
  }
  SUBCASE("shape mismatch") {
    nn::ModelParams p = single({0.1, 0.2});
    AdamState s = AdamState::for_params(p);
    CHECK_THROWS_AS(adam_step(p, single({1.0}), s), DimensionError);
  }
}

TEST_CASE("training config") {
  TrainConfig d;
  CHECK(d.learning_rate == 1e-3);
  CHECK(d.batch_size == 16);
  CHECK(d.max_epochs == 200);
  CHECK(d.patience == 20);
  CHECK(d.chunk_len == 500);
  CHECK(d.errors().empty());

  TrainConfig c = tiny(Mode::kMtlHard);
  TrainConfig r = TrainConfig::from_json(c.to_json());
  CHECK(r.to_json() == c.to_json());

  try {
    TrainConfig::from_json({{"mode", "mtl_medium"},
                            {"learning_rate", -1.0},
                            {"batch_size", -3},
                            {"temperature", 0.0},
                            {"colour", "blue"}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.issues().size() == 5);
  }
  CHECK_THROWS_AS(TrainConfig::from_json({{"network", {{"trunk_pools", {{1, 2}}}}}}),
                  ConfigError);
}

TEST_CASE("dataset splits") {
  const Dataset& ds = fixture_dataset();
  REQUIRE(ds.clips.size() == 8);
  CHECK(ds.num_folds == 4);
  for (int k = 0; k < 4; ++k) {
    Split s = make_split(ds, k);
    CHECK(s.test.size() == 2);
    CHECK(s.val.size() == 2);
    CHECK(s.train.size() == 4);
    std::set<std::size_t> all(s.test.begin(), s.test.end());
    all.insert(s.val.begin(), s.val.end());
    all.insert(s.train.begin(), s.train.end());
    CHECK(all.size() == 8);
  }
  Split every = make_split(ds, -1);
  CHECK(every.train.size() == 8);
  CHECK(every.val == every.train);
  CHECK_THROWS_AS(make_split(ds, 4), ConfigError);
  CHECK(ds.clips[0].roll.frames() == ds.clips[0].features.frames());
}

TEST_CASE("teacher training") {
  const Dataset& ds = fixture_dataset();
  SUBCASE("fits the synthetic scenes") {
    TrainConfig c = cli::fixture_teacher_config();
    TrainResult r = train_teacher(ds, make_split(ds, -1), c);
    CHECK(teacher_accuracy(r.model, ds, make_split(ds, -1).train) == 1.0);
    CHECK(r.log.size() <= 200);
  }
  SUBCASE("deterministic") {
    TrainConfig c = tiny_teacher();
    TrainResult a = train_teacher(ds, make_split(ds, 0), c);
    TrainResult b = train_teacher(ds, make_split(ds, 0), c);
    CHECK(a.log_jsonl() == b.log_jsonl());
    CHECK(nn::encode_checkpoint(a.model) == nn::encode_checkpoint(b.model));
  }
  SUBCASE("patience 0 stops one epoch after the best") {
    TrainConfig c = tiny_teacher();
    c.patience = 0;
    c.max_epochs = 200;
    c.learning_rate = 0.05;  // large steps make validation regress quickly
    TrainResult r = train_teacher(ds, make_split(ds, 0), c);
    REQUIRE(r.log.size() < c.max_epochs);
    CHECK(r.log.size() == r.best_epoch + 1);
  }
  SUBCASE("errors") {
    Split empty;
    empty.val = {0};
    CHECK_THROWS_AS(train_teacher(ds, empty, tiny_teacher()), DataError);
    CHECK_THROWS_AS(train_teacher(ds, make_split(ds, 0), tiny(Mode::kMtlHard)),
                    ConfigError);
  }
}

TEST_CASE("soft labels") {
  const Dataset& ds = fixture_dataset();
  TrainResult teacher = train_teacher(ds, make_split(ds, -1), tiny_teacher());

  SUBCASE("zero output layer gives uniform labels") {
    nn::Model flat = teacher.model;
    for (double& v : flat.params.at("out.weight").values()) v = 0.0;
    for (double& v : flat.params.at("out.bias").values()) v = 0.0;
    for (const auto& [id, p] : compute_soft_labels(flat, ds, 2.0)) {
      for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
    }
  }
  SUBCASE("distributions, temperature and round trip") {
    double prev_entropy = -1.0;
    for (double t : {0.5, 1.0, 2.0, 4.0, 8.0}) {
      SoftLabels labels = compute_soft_labels(teacher.model, ds, t);
      CHECK(labels.size() == ds.clips.size());
      double h = 0.0;
      for (const auto& [id, p] : labels) {
        double s = 0.0;
        for (double v : p) s += v;
        CHECK(std::abs(s - 1.0) <= 1e-9);
        h += entropy(p);
      }
      h /= static_cast<double>(labels.size());
      CHECK(h > prev_entropy);
      prev_entropy = h;

      SoftLabels back = decode_soft_labels(encode_soft_labels(labels));
      CHECK(back == labels);
    }
    CHECK_THROWS_AS(compute_soft_labels(teacher.model, ds, 0.0), ArgumentError);
    CHECK_THROWS_AS(decode_soft_labels("[1, 2]"), ParseError);
  }
}

TEST_CASE("student objectives line up") {
  const Dataset& ds = fixture_dataset();
  const Split split = make_split(ds, -1);

  SUBCASE("event_only equals mtl_hard with alpha 0") {
    TrainConfig e = tiny(Mode::kEventOnly);
    TrainConfig h = tiny(Mode::kMtlHard);
    h.alpha = 0.0;
    TrainResult a = train_student(ds, split, e);
    TrainResult b = train_student(ds, split, h);
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
      CHECK(a.log[i].train_losses["event"] == b.log[i].train_losses["event"]);
      CHECK(a.log[i].train_losses["total"] == b.log[i].train_losses["total"]);
      CHECK(a.log[i].val_metrics == b.log[i].val_metrics);
    }
    CHECK(a.model.params.checksum() == b.model.params.checksum());
  }

  SUBCASE("one-hot soft labels at T=1 reproduce mtl_hard") {
    SoftLabels onehot;
    for (const auto& clip : ds.clips) {
      onehot[clip.clip_id] = loss::SceneTarget::one_hot(clip.scene, 4).probs;
    }
    TrainConfig s = tiny(Mode::kMtlSoft);
    s.beta = 0.7;
    TrainConfig h = tiny(Mode::kMtlHard);
    h.alpha = 0.7;
    TrainResult a = train_student(ds, split, s, &onehot);
    TrainResult b = train_student(ds, split, h);
    for (std::size_t i = 0; i < a.log.size(); ++i) {
      for (const char* k : {"event", "scene", "total"}) {
        CHECK(std::abs(a.log[i].train_losses[k].get<double>() -
                       b.log[i].train_losses[k].get<double>()) <= 1e-9);
      }
    }
  }

  SUBCASE("mtl_soft needs soft labels") {
    CHECK_THROWS_AS(train_student(ds, split, tiny(Mode::kMtlSoft)), ConfigError);
    SoftLabels partial{{ds.clips[0].clip_id, {0.25, 0.25, 0.25, 0.25}}};
    try {
      train_student(ds, split, tiny(Mode::kMtlSoft), &partial);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.issues().size() == 7);
    }
    CHECK_THROWS_AS(train_student(ds, split, tiny_teacher()), ConfigError);
  }
}

TEST_CASE("student training is deterministic and leaves the teacher alone") {
  const Dataset& ds = fixture_dataset();
  const Split split = make_split(ds, -1);
  TrainResult teacher = train_teacher(ds, split, tiny_teacher());
  const std::string before = teacher.model.params.checksum();
  const SoftLabels soft = compute_soft_labels(teacher.model, ds, 2.0);
  TrainConfig c = tiny(Mode::kMtlSoft);
  c.temperature = 2.0;
  TrainResult a = train_student(ds, split, c, &soft);
  TrainResult b = train_student(ds, split, c, &soft);
  CHECK(teacher.model.params.checksum() == before);
  CHECK(a.log_jsonl() == b.log_jsonl());
  CHECK(nn::encode_checkpoint(a.model) == nn::encode_checkpoint(b.model));
  CHECK(a.log.front().to_json().contains("val_metrics"));
}

TEST_CASE("training loss decreases in every mode") {
  const Dataset& ds = fixture_dataset();
  const Split split = make_split(ds, -1);
  TrainResult teacher = train_teacher(ds, split, tiny_teacher());
  const SoftLabels soft = compute_soft_labels(teacher.model, ds, 1.0);
  for (Mode mode : {Mode::kEventOnly, Mode::kMtlHard, Mode::kMtlSoft}) {
    TrainConfig c = tiny(mode);
    c.max_epochs = 100;
    TrainResult r = train_student(ds, split, c, &soft);
    REQUIRE(r.log.size() == 100);
    CHECK(r.log.back().train_losses["total"].get<double>() <
          r.log.front().train_losses["total"].get<double>());
  }
}

TEST_CASE("fold evaluation with an oracle predictor") {
  const Dataset& ds = fixture_dataset();
  const Split split = make_split(ds, 1);
  PosteriorFn oracle = [](const ClipData& clip) {
    Tensor p({clip.roll.classes(), clip.roll.frames()});
    for (std::size_t m = 0; m < clip.roll.classes(); ++m) {
      for (std::size_t n = 0; n < clip.roll.frames(); ++n) {
        p.at(m, n) = clip.roll.at(m, n) ? 0.9 : 0.1;
      }
    }
    return p;
  };
  eval::EvalConfig fixed;
  eval::Report r = evaluate_clips(ds, split.test, split.val, oracle, fixed);
  CHECK(r.f1.value == 100.0);
  CHECK(r.er.value == 0.0);

  eval::EvalConfig calibrated;
  calibrated.policy = eval::ThresholdPolicy::Kind::kCalibrated;
  eval::Report rc = evaluate_clips(ds, split.test, split.val, oracle, calibrated);
  CHECK(rc.f1.value == 100.0);
  CHECK(rc.policy.per_class.size() == 5);
}

TEST_CASE("cross-validation") {
  const Dataset& ds = fixture_dataset();
  CvConfig cv;
  cv.seeds = {0, 1, 2};
  cv.teacher = tiny_teacher();
  cv.teacher.max_epochs = 1;
  for (Mode mode : {Mode::kEventOnly, Mode::kMtlSoft}) {
    TrainConfig c = tiny(mode);
    c.max_epochs = 1;
    cv.runs.push_back({std::string(to_string(mode)), c});
  }
  CvResult serial = run_cross_validation(ds, cv, 1);
  CHECK(serial.runs.size() == 4 * 3 * 2);
  REQUIRE(serial.rows.size() == 2);
  CHECK(serial.rows[0].runs == 12);
  CHECK(serial.rows[0].event_f1.size() == 5);
  for (std::size_t i = 1; i < serial.runs.size(); ++i) {
    const auto& a = serial.runs[i - 1];
    const auto& b = serial.runs[i];
    CHECK(std::tie(a.fold, a.seed) <= std::tie(b.fold, b.seed));
  }
  CHECK(serial.comparison_table().find("mtl_soft") != std::string::npos);
  CHECK(serial.per_event_table().find("speech") != std::string::npos);

  CvResult parallel = run_cross_validation(ds, cv, 3);
  CHECK(parallel.to_json() == serial.to_json());

  cv.folds = {7};
  CHECK_THROWS_AS(run_cross_validation(ds, cv), ConfigError);
}

TEST_CASE("cross-validation aggregation") {
  std::vector<CvRun> runs(3);
  for (auto& r : runs) {
    r.name = "x";
    r.report.f1 = {42.5, false};
    r.report.er = {0.75, false};
    r.report.per_event = {eval::EventRow{"a", {}, {10.0, false}, {1.5, false}}};
  }
  auto rows = aggregate_runs(runs, {"x"}, 1);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mean_f1 == 42.5);
  CHECK(rows[0].mean_er == 0.75);
  CHECK(rows[0].event_f1[0] == 10.0);
  CHECK(rows[0].event_er[0] == 1.5);
}

TEST_CASE("cv config parsing") {
  nlohmann::json j{{"seeds", {0}},
                   {"teacher", {{"mode", "teacher"}}},
                   {"runs", {{{"name", "a"}, {"mode", "event_only"}},
                             {{"name", "b"}, {"mode", "mtl_soft"}, {"beta", 0.5}}}}};
  CvConfig c = CvConfig::from_json(j);
  CHECK(c.runs.size() == 2);
  CHECK(c.runs[1].config.beta == 0.5);
  CHECK(CvConfig::from_json(c.to_json()).to_json() == c.to_json());

  nlohmann::json bad{{"seeds", nlohmann::json::array()},
                     {"runs", {{{"mode", "teacher"}, {"batch_size", 0}}}},
                     {"extra", true}};
  try {
    CvConfig::from_json(bad);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    // empty seeds, missing name, batch_size, unknown key, teacher-mode run,
    // teacher config mode
    CHECK(e.issues().size() >= 5);
  }
}
