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

#include "sedkit/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "sedkit/error.hpp"
#include "sedkit/io.hpp"
#include "sedkit/losses.hpp"
#include "sedkit/ops.hpp"

namespace sedkit::train {

namespace fs = std::filesystem;
using ad::Tape;
using ad::Var;
using nlohmann::json;

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kTeacher:
      return "teacher";
    case Mode::kEventOnly:
      return "event_only";
    case Mode::kMtlHard:
      return "mtl_hard";
    case Mode::kMtlSoft:
      return "mtl_soft";
  }
  return "unknown";
}

Mode mode_from_string(std::string_view name) {
  for (Mode m : {Mode::kTeacher, Mode::kEventOnly, Mode::kMtlHard, Mode::kMtlSoft}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("mode must be one of teacher, event_only, mtl_hard, mtl_soft; got \"" +
                    std::string(name) + "\"");
}

// ---------------------------------------------------------------------------
// Configuration

std::vector<std::string> TrainConfig::errors() const {
  std::vector<std::string> e;
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) e.push_back("alpha must be >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) e.push_back("beta must be >= 0");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    e.push_back("temperature must be > 0");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    e.push_back("learning_rate must be > 0");
  }
  if (batch_size == 0) e.push_back("batch_size must be >= 1");
  if (max_epochs == 0) e.push_back("max_epochs must be >= 1");
  if (chunk_len == 0) e.push_back("chunk_len must be >= 1");
  if (fold < -1) e.push_back("fold must be >= -1");
  try {
    network.validate();
  } catch (const ConfigError& err) {
    e.push_back(err.what());
  }
  evaluation.collect_errors(e);
  return e;
}

void TrainConfig::validate() const {
  auto e = errors();
  if (!e.empty()) throw ConfigError(std::move(e));
}

json TrainConfig::to_json() const {
  return {{"mode", to_string(mode)},
          {"alpha", alpha},
          {"beta", beta},
          {"temperature", temperature},
          {"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"max_epochs", max_epochs},
          {"patience", patience},
          {"seed", seed},
          {"fold", fold},
          {"chunk_len", chunk_len},
          {"network", network.to_json()},
          {"evaluation", evaluation.to_json()}};
}

namespace {

class FieldReader {
 public:
  FieldReader(const json& j, std::string prefix, std::vector<std::string>& errors)
      : j_(j), prefix_(std::move(prefix)), errors_(errors) {}

  template <typename T>
  void read(const char* key, T& out) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    try {
      j_.at(key).get_to(out);
    } catch (const json::exception&) {
      errors_.push_back(prefix_ + key + " has the wrong type");
    }
  }

  // Non-negative integer; negative or fractional values are reported.
  void read_count(const char* key, std::size_t& out) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      errors_.push_back(prefix_ + key + " must be a non-negative integer");
      return;
    }
    out = v.get<std::size_t>();
  }

  void mark(const char* key) { seen_.push_back(key); }

  void check_unknown() {
    for (const auto& [key, _] : j_.items()) {
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
        errors_.push_back(prefix_ + "unknown key \"" + key + "\"");
      }
    }
  }

 private:
  const json& j_;
  std::string prefix_;
  std::vector<std::string>& errors_;
  std::vector<std::string> seen_;
};

TrainConfig parse_train_config(const json& j, const std::string& prefix,
                               std::vector<std::string>& errors,
                               std::vector<std::string> extra_keys = {}) {
  TrainConfig c;
  if (!j.is_object()) {
    errors.push_back(prefix + "must be an object");
    return c;
  }
  FieldReader r(j, prefix, errors);
  for (const auto& k : extra_keys) r.mark(k.c_str());
  std::string mode = std::string(to_string(c.mode));
  r.read("mode", mode);
  try {
    c.mode = mode_from_string(mode);
  } catch (const ConfigError& e) {
    errors.push_back(prefix + e.what());
  }
  r.read("alpha", c.alpha);
  r.read("beta", c.beta);
  r.read("temperature", c.temperature);
  r.read("learning_rate", c.learning_rate);
  r.read_count("batch_size", c.batch_size);
  r.read_count("max_epochs", c.max_epochs);
  r.read_count("patience", c.patience);
  r.read("seed", c.seed);
  r.read("fold", c.fold);
  r.read_count("chunk_len", c.chunk_len);
  r.mark("network");
  if (j.contains("network")) {
    try {
      c.network = nn::NetSpec::from_json(j.at("network"));
    } catch (const ConfigError& e) {
      errors.push_back(prefix + e.what());
    }
  }
  r.mark("evaluation");
  if (j.contains("evaluation")) {
    c.evaluation = eval::EvalConfig::from_json(j.at("evaluation"), errors);
  }
  r.check_unknown();
  for (auto& e : c.errors()) {
    const std::string msg = prefix + e;
    if (std::find(errors.begin(), errors.end(), msg) == errors.end()) {
      errors.push_back(msg);
    }
  }
  return c;
}

}  // namespace

TrainConfig TrainConfig::from_json(const json& j) {
  std::vector<std::string> errors;
  TrainConfig c = parse_train_config(j, "", errors);
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

// ---------------------------------------------------------------------------
// Optimizer

AdamState AdamState::for_params(const nn::ModelParams& params) {
  return {params.zeros_like(), params.zeros_like(), 0};
}

void adam_step(nn::ModelParams& params, const nn::ModelParams& grads,
               AdamState& state, const AdamConfig& config) {
  if (state.m.size() == 0 && state.step == 0) state = AdamState::for_params(params);
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw DimensionError("optimizer: parameter, gradient and moment counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Shape& s = params.tensor(i).shape();
    if (grads.tensor(i).shape() != s || state.m.tensor(i).shape() != s ||
        state.v.tensor(i).shape() != s) {
      throw DimensionError("optimizer: shape mismatch for " + params.name(i));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params.tensor(i).values();
    const auto g = grads.tensor(i).values();
    auto m = state.m.tensor(i).values();
    auto v = state.v.tensor(i).values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p[k] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.eps);
    }
  }
}

// ---------------------------------------------------------------------------
// Data

std::size_t Dataset::index_of(const std::string& clip_id) const {
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (clips[i].clip_id == clip_id) return i;
  }
  throw DataError("clip \"" + clip_id + "\" is not in the dataset");
}

fs::path feature_cache_path(const fs::path& features_dir, const std::string& clip_id) {
  return features_dir / (clip_id + ".sdfc");
}

Dataset load_dataset(const data::Manifest& manifest, const fs::path& features_dir) {
  Dataset ds;
  ds.vocabulary = manifest.vocabulary;
  ds.num_folds = manifest.num_folds;
  for (const auto& rec : manifest.clips) {
    const fs::path path = feature_cache_path(features_dir, rec.clip_id);
    ClipData clip;
    clip.clip_id = rec.clip_id;
    clip.scene = rec.scene;
    clip.fold = rec.fold;
    try {
      clip.features = features::read_feature_cache(path, rec.clip_id);
    } catch (const Error& e) {
      throw DataError("clip \"" + rec.clip_id + "\": features unavailable (" +
                      e.what() + ")");
    }
    clip.roll = data::events_to_roll(rec.events, ds.vocabulary.num_events(),
                                     clip.features.frames(),
                                     clip.features.hop_seconds);
    ds.clips.push_back(std::move(clip));
  }
  return ds;
}

Split make_split(const Dataset& dataset, int test_fold) {
  Split s;
  if (test_fold == -1) {
    for (std::size_t i = 0; i < dataset.clips.size(); ++i) {
      s.train.push_back(i);
      s.val.push_back(i);
    }
    return s;
  }
  if (dataset.num_folds < 2 || test_fold < 0 || test_fold >= dataset.num_folds) {
    throw ConfigError("fold " + std::to_string(test_fold) + " is not in [0, " +
                      std::to_string(dataset.num_folds) + ")");
  }
  const int val_fold = (test_fold + 1) % dataset.num_folds;
  for (std::size_t i = 0; i < dataset.clips.size(); ++i) {
    const int f = dataset.clips[i].fold;
    if (f == test_fold) {
      s.test.push_back(i);
    } else if (f == val_fold) {
      s.val.push_back(i);
    } else {
      s.train.push_back(i);
    }
  }
  return s;
}

json EpochRecord::to_json() const {
  return {{"epoch", epoch}, {"train_losses", train_losses}, {"val_metrics", val_metrics}};
}

std::string TrainResult::log_jsonl() const {
  std::string out;
  for (const auto& r : log) out += r.to_json().dump() + "\n";
  return out;
}

namespace {

constexpr std::uint64_t kShuffleSalt = 0x9e3779b97f4a7c15ULL;

features::BandStats training_stats(const Dataset& ds,
                                   const std::vector<std::size_t>& clips) {
  std::vector<features::LogMelSpectrogram> feats;
  feats.reserve(clips.size());
  for (std::size_t i : clips) feats.push_back(ds.clips[i].features);
  features::BandStats stats = features::compute_band_stats(feats);
  // A constant band carries no information; leave it unscaled.
  for (double& s : stats.stddev) {
    if (!(s > 0.0)) s = 1.0;
  }
  return stats;
}

nn::NetSpec sized_spec(const TrainConfig& config, const Dataset& ds) {
  nn::NetSpec spec = config.network;
  spec.num_scenes = ds.vocabulary.num_scenes();
  spec.num_events = ds.vocabulary.num_events();
  spec.validate();
  return spec;
}

double sum_event_loss(const Tensor& logits, const data::EventRoll& roll,
                      std::size_t frames) {
  double total = 0.0;
  for (std::size_t m = 0; m < roll.classes(); ++m) {
    for (std::size_t n = 0; n < frames; ++n) {
      const double y = logits.at(m, n);
      total += std::max(y, 0.0) - y * roll.at(m, n) + std::log1p(std::exp(-std::abs(y)));
    }
  }
  return total;
}

template <typename Fn>
void for_each_batch(std::vector<std::size_t>& order, std::size_t batch_size,
                    std::mt19937_64& rng, Fn&& fn) {
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    fn(std::span<const std::size_t>(order.data() + start, end - start));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Teacher

double teacher_accuracy(const nn::Model& teacher, const Dataset& dataset,
                        const std::vector<std::size_t>& clips) {
  if (clips.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i : clips) {
    const auto& clip = dataset.clips[i];
    const auto logits = nn::teacher_logits(teacher, teacher.prepare(clip.features));
    const auto best = static_cast<std::size_t>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
    correct += best == clip.scene;
  }
  return static_cast<double>(correct) / static_cast<double>(clips.size());
}

TrainResult train_teacher(const Dataset& ds, const Split& split,
                          const TrainConfig& config) {
  if (config.mode != Mode::kTeacher) {
    throw ConfigError("train_teacher needs mode \"teacher\"");
  }
  config.validate();
  if (split.train.empty()) throw DataError("training fold is empty");

  const nn::NetSpec spec = sized_spec(config, ds);
  TrainResult result;
  nn::Model model = nn::Model::create(nn::NetKind::kTeacher, spec, config.seed);
  model.feature_stats = training_stats(ds, split.train);
  model.extra = {{"mode", "teacher"}, {"config", config.to_json()}};

  std::vector<Tensor> prepared(ds.clips.size());
  for (std::size_t i : split.train) prepared[i] = model.prepare(ds.clips[i].features);
  for (std::size_t i : split.val) prepared[i] = model.prepare(ds.clips[i].features);

  AdamState adam = AdamState::for_params(model.params);
  const AdamConfig adam_cfg{config.learning_rate};
  std::mt19937_64 rng(config.seed ^ kShuffleSalt);
  std::vector<std::size_t> order = split.train;

  nn::ModelParams best_params = model.params;
  double best_acc = -1.0, best_loss = 0.0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    double loss_sum = 0.0;
    for_each_batch(order, config.batch_size, rng, [&](std::span<const std::size_t> batch) {
      nn::ModelParams grads = model.params.zeros_like();
      for (std::size_t i : batch) {
        Tape tape;
        nn::ParamBinding p(tape, model.params, true);
        Var logits = nn::teacher_forward(tape, p, spec, prepared[i]);
        Var loss = loss::scene_hard_loss(
            tape, logits, loss::SceneTarget::one_hot(ds.clips[i].scene, spec.num_scenes));
        tape.backward(loss);
        loss_sum += tape.value(loss)[0];
        p.accumulate_grads(tape, grads, 1.0 / static_cast<double>(batch.size()));
      }
      adam_step(model.params, grads, adam, adam_cfg);
    });

    double val_loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t i : split.val) {
      const auto logits = nn::teacher_logits(model, prepared[i]);
      const auto logq = ad::log_softmax_temperature(logits, 1.0);
      val_loss -= logq[ds.clips[i].scene];
      correct += static_cast<std::size_t>(
                     std::max_element(logits.begin(), logits.end()) - logits.begin()) ==
                 ds.clips[i].scene;
    }
    const double n_val = static_cast<double>(std::max<std::size_t>(1, split.val.size()));
    const double acc = static_cast<double>(correct) / n_val;
    val_loss /= n_val;

    result.log.push_back(
        {epoch,
         {{"scene", loss_sum / static_cast<double>(order.size())}},
         {{"accuracy", acc}, {"loss", val_loss}}});

    if (acc > best_acc || (acc == best_acc && val_loss < best_loss)) {
      best_acc = acc;
      best_loss = val_loss;
      result.best_epoch = epoch;
      best_params = model.params;
    } else if (epoch - result.best_epoch > config.patience) {
      break;
    }
  }
  model.params = std::move(best_params);
  model.extra["best_epoch"] = result.best_epoch;
  result.model = std::move(model);
  return result;
}

// ---------------------------------------------------------------------------
// Soft labels

SoftLabels compute_soft_labels(const nn::Model& teacher, const Dataset& ds,
                               double temperature) {
  if (!(temperature > 0.0)) throw ArgumentError("temperature must be > 0");
  SoftLabels out;
  for (const auto& clip : ds.clips) {
    if (clip.features.data.size() == 0) {
      throw DataError("clip \"" + clip.clip_id + "\" has no features");
    }
    out[clip.clip_id] = loss::distill_targets(
        nn::teacher_logits(teacher, teacher.prepare(clip.features)), temperature);
  }
  return out;
}

std::string encode_soft_labels(const SoftLabels& labels) {
  json j = json::object();
  for (const auto& [id, p] : labels) j[id] = p;
  return j.dump(1) + "\n";
}

SoftLabels decode_soft_labels(std::string_view text) {
  SoftLabels out;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw ParseError("soft labels must be a JSON object");
    for (const auto& [id, p] : j.items()) {
      out[id] = p.get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("soft labels: ") + e.what());
  }
  return out;
}

void write_soft_labels(const fs::path& path, const SoftLabels& labels) {
  io::write_file(path, encode_soft_labels(labels));
}

SoftLabels read_soft_labels(const fs::path& path) {
  return decode_soft_labels(io::read_file(path));
}

// ---------------------------------------------------------------------------
// Student

StudentEvaluation evaluate_student(const nn::Model& student, const Dataset& ds,
                                   const std::vector<std::size_t>& clips,
                                   const eval::EvalConfig& config,
                                   std::size_t chunk_len) {
  StudentEvaluation out;
  const auto policy = eval::ThresholdPolicy::fixed_at(config.fixed_threshold);
  std::vector<data::EventRoll> preds;
  preds.reserve(clips.size());
  double loss = 0.0, cells = 0.0;
  for (std::size_t i : clips) {
    const auto& clip = ds.clips[i];
    auto pred = nn::student_predict(student, student.prepare(clip.features), chunk_len);
    loss += sum_event_loss(pred.event_logits, clip.roll, clip.roll.frames());
    cells += static_cast<double>(clip.roll.frames() * clip.roll.classes());
    preds.push_back(eval::binarize(pred.event_posteriors, policy,
                                   clip.features.hop_seconds, config.median_window));
  }
  std::vector<eval::ClipPair> pairs;
  for (std::size_t k = 0; k < clips.size(); ++k) {
    pairs.push_back({&ds.clips[clips[k]].roll, &preds[k]});
  }
  out.report = eval::make_report(pairs, ds.vocabulary.events, policy,
                                 config.segment_seconds);
  if (!clips.empty()) {
    out.event_loss = loss / static_cast<double>(clips.size());
    out.event_loss_per_frame_event = loss / cells;
  }
  return out;
}

TrainResult train_student(const Dataset& ds, const Split& split,
                          const TrainConfig& config, const SoftLabels* soft_labels) {
  if (config.mode == Mode::kTeacher) {
    throw ConfigError("train_student needs a student mode");
  }
  config.validate();
  if (split.train.empty()) throw DataError("training fold is empty");
  const bool soft = config.mode == Mode::kMtlSoft;
  if (soft) {
    if (soft_labels == nullptr) throw ConfigError("mtl_soft needs soft labels");
    std::vector<std::string> missing;
    for (std::size_t i : split.train) {
      const auto it = soft_labels->find(ds.clips[i].clip_id);
      if (it == soft_labels->end()) {
        missing.push_back("no soft label for clip \"" + ds.clips[i].clip_id + "\"");
      } else if (it->second.size() != ds.vocabulary.num_scenes()) {
        missing.push_back("soft label for clip \"" + ds.clips[i].clip_id +
                          "\" has the wrong length");
      }
    }
    if (!missing.empty()) throw ConfigError(std::move(missing));
  }

  const nn::NetSpec spec = sized_spec(config, ds);
  TrainResult result;
  nn::Model model = nn::Model::create(nn::NetKind::kStudent, spec, config.seed);
  model.feature_stats = training_stats(ds, split.train);
  model.extra = {{"mode", to_string(config.mode)}, {"config", config.to_json()}};

  std::vector<data::Chunk> chunks;
  std::vector<loss::SceneTarget> targets(ds.clips.size());
  for (std::size_t i : split.train) {
    const Tensor prepared = model.prepare(ds.clips[i].features);
    for (auto& c : data::chunk_clip(prepared, ds.clips[i].roll, config.chunk_len, i)) {
      chunks.push_back(std::move(c));
    }
    targets[i] = soft ? loss::SceneTarget::soft(soft_labels->at(ds.clips[i].clip_id))
                      : loss::SceneTarget::one_hot(ds.clips[i].scene, spec.num_scenes);
  }

  AdamState adam = AdamState::for_params(model.params);
  const AdamConfig adam_cfg{config.learning_rate};
  std::mt19937_64 rng(config.seed ^ kShuffleSalt);
  std::vector<std::size_t> order(chunks.size());
  std::iota(order.begin(), order.end(), 0);

  nn::ModelParams best_params = model.params;
  double best_f1 = -1.0, best_loss = 0.0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    double e1_sum = 0.0, scene_sum = 0.0, total_sum = 0.0, cells = 0.0;
    for_each_batch(order, config.batch_size, rng, [&](std::span<const std::size_t> batch) {
      nn::ModelParams grads = model.params.zeros_like();
      for (std::size_t k : batch) {
        const data::Chunk& chunk = chunks[k];
        Tape tape;
        nn::ParamBinding p(tape, model.params, true);
        nn::StudentOutputs out = nn::student_forward(tape, p, spec, chunk.features);
        Var e1 = loss::event_loss(tape, out.event_logits, chunk.roll, chunk.mask);
        Var objective = e1;
        double scene_term = 0.0;
        switch (config.mode) {
          case Mode::kEventOnly:
            break;
          case Mode::kMtlHard: {
            Var e2 = loss::scene_hard_loss(tape, out.scene_logits, targets[chunk.clip]);
            scene_term = tape.value(e2)[0];
            objective = loss::mtl_objective(tape, e1, e2, config.alpha);
            break;
          }
          case Mode::kMtlSoft: {
            Var e3 = loss::soft_scene_loss(tape, out.scene_logits,
                                           targets[chunk.clip].probs, config.temperature);
            scene_term = tape.value(e3)[0];
            objective = loss::proposed_objective(tape, e1, e3, config.beta);
            break;
          }
          case Mode::kTeacher:
            break;
        }
        tape.backward(objective);
        e1_sum += tape.value(e1)[0];
        scene_sum += scene_term;
        total_sum += tape.value(objective)[0];
        cells += static_cast<double>(chunk.valid * spec.num_events);
        p.accumulate_grads(tape, grads, 1.0 / static_cast<double>(batch.size()));
      }
      adam_step(model.params, grads, adam, adam_cfg);
    });

    const double n_chunks = static_cast<double>(chunks.size());
    json losses{{"event", e1_sum / n_chunks},
                {"event_per_frame_event", e1_sum / cells},
                {"total", total_sum / n_chunks}};
    if (config.mode != Mode::kEventOnly) losses["scene"] = scene_sum / n_chunks;

    const StudentEvaluation val =
        evaluate_student(model, ds, split.val, config.evaluation, config.chunk_len);
    result.log.push_back({epoch,
                          losses,
                          {{"f1", val.report.f1.value},
                           {"er", val.report.er.value},
                           {"event_loss", val.event_loss}}});

    const double f1 = val.report.f1.value;
    if (f1 > best_f1 || (f1 == best_f1 && val.event_loss < best_loss)) {
      best_f1 = f1;
      best_loss = val.event_loss;
      result.best_epoch = epoch;
      best_params = model.params;
    } else if (epoch - result.best_epoch > config.patience) {
      break;
    }
  }
  model.params = std::move(best_params);
  model.extra["best_epoch"] = result.best_epoch;
  result.model = std::move(model);
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation of trained students

PosteriorFn model_predictor(const nn::Model& student, std::size_t chunk_len) {
  return [student, chunk_len](const ClipData& clip) {
    return nn::student_predict(student, student.prepare(clip.features), chunk_len)
        .event_posteriors;
  };
}

eval::Report evaluate_clips(const Dataset& ds, const std::vector<std::size_t>& clips,
                            const std::vector<std::size_t>& calibration,
                            const PosteriorFn& predict,
                            const eval::EvalConfig& config) {
  eval::ThresholdPolicy policy = eval::ThresholdPolicy::fixed_at(config.fixed_threshold);
  if (config.policy == eval::ThresholdPolicy::Kind::kCalibrated) {
    if (calibration.empty()) {
      throw DataError("calibrated thresholds need at least one validation clip");
    }
    std::vector<Tensor> posts;
    std::vector<const data::EventRoll*> refs;
    for (std::size_t i : calibration) {
      posts.push_back(predict(ds.clips[i]));
      refs.push_back(&ds.clips[i].roll);
    }
    auto thresholds = eval::calibrate_thresholds(posts, refs, config.effective_grid(),
                                                 config.median_window,
                                                 config.segment_seconds);
    // A class never active in the calibration clips has nothing to fit.
    for (std::size_t m = 0; m < thresholds.size(); ++m) {
      bool seen = false;
      for (const auto* r : refs) {
        for (std::size_t n = 0; n < r->frames() && !seen; ++n) seen = r->at(m, n) != 0;
      }
      if (!seen) thresholds[m] = config.fixed_threshold;
    }
    policy = eval::ThresholdPolicy::calibrated(std::move(thresholds));
  }
  std::vector<data::EventRoll> preds;
  preds.reserve(clips.size());
  for (std::size_t i : clips) {
    const auto& clip = ds.clips[i];
    const Tensor post = predict(clip);
    if (post.rank() != 2 || post.dim(0) != clip.roll.classes() ||
        post.dim(1) != clip.roll.frames()) {
      throw DimensionError("clip \"" + clip.clip_id + "\": posteriors are " +
                           shape_to_string(post.shape()));
    }
    preds.push_back(
        eval::binarize(post, policy, clip.features.hop_seconds, config.median_window));
  }
  std::vector<eval::ClipPair> pairs;
  for (std::size_t k = 0; k < clips.size(); ++k) {
    pairs.push_back({&ds.clips[clips[k]].roll, &preds[k]});
  }
  return eval::make_report(pairs, ds.vocabulary.events, policy, config.segment_seconds);
}

// ---------------------------------------------------------------------------
// Cross-validation

namespace {

// Checks that do not belong to a nested training or evaluation config.
std::vector<std::string> cv_structure_errors(const CvConfig& c) {
  std::vector<std::string> e;
  if (c.seeds.empty()) e.push_back("seeds must not be empty");
  if (c.runs.empty()) e.push_back("runs must not be empty");
  for (int f : c.folds) {
    if (f < 0) e.push_back("folds must be >= 0");
  }
  std::vector<std::string> names;
  for (const auto& r : c.runs) {
    if (r.name.empty()) e.push_back("every run needs a name");
    if (std::find(names.begin(), names.end(), r.name) != names.end()) {
      e.push_back("duplicate run name \"" + r.name + "\"");
    }
    names.push_back(r.name);
    if (r.config.mode == Mode::kTeacher) {
      e.push_back("run \"" + r.name + "\" must use a student mode");
    }
  }
  if (c.teacher.mode != Mode::kTeacher) e.push_back("teacher.mode must be \"teacher\"");
  return e;
}

}  // namespace

std::vector<std::string> CvConfig::errors() const {
  std::vector<std::string> e = cv_structure_errors(*this);
  for (const auto& r : runs) {
    for (const auto& msg : r.config.errors()) e.push_back("runs." + r.name + ": " + msg);
  }
  for (const auto& msg : teacher.errors()) e.push_back("teacher: " + msg);
  evaluation.collect_errors(e);
  return e;
}

json CvConfig::to_json() const {
  json r = json::array();
  for (const auto& run : runs) {
    json c = run.config.to_json();
    c["name"] = run.name;
    r.push_back(c);
  }
  return {{"folds", folds},
          {"seeds", seeds},
          {"teacher", teacher.to_json()},
          {"runs", r},
          {"evaluation", evaluation.to_json()}};
}

CvConfig CvConfig::from_json(const json& j) {
  std::vector<std::string> errors;
  CvConfig c;
  c.teacher.mode = Mode::kTeacher;
  if (!j.is_object()) throw ConfigError("cross-validation config must be an object");
  FieldReader r(j, "", errors);
  r.read("folds", c.folds);
  r.read("seeds", c.seeds);
  r.mark("teacher");
  if (j.contains("teacher")) {
    c.teacher = parse_train_config(j.at("teacher"), "teacher.", errors);
  }
  r.mark("runs");
  if (!j.contains("runs") || !j.at("runs").is_array()) {
    errors.push_back("runs must be an array of run configs");
  } else {
    std::size_t index = 0;
    for (const auto& item : j.at("runs")) {
      CvRunSpec run;
      const std::string prefix = "runs[" + std::to_string(index++) + "].";
      if (item.is_object() && item.contains("name") && item.at("name").is_string()) {
        run.name = item.at("name").get<std::string>();
      } else {
        errors.push_back(prefix + "name is required");
      }
      run.config = parse_train_config(item, prefix, errors, {"name"});
      c.runs.push_back(std::move(run));
    }
  }
  r.mark("evaluation");
  if (j.contains("evaluation")) {
    c.evaluation = eval::EvalConfig::from_json(j.at("evaluation"), errors);
  }
  r.check_unknown();
  for (auto& msg : cv_structure_errors(c)) errors.push_back(std::move(msg));
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

std::vector<CvRow> aggregate_runs(const std::vector<CvRun>& runs,
                                  const std::vector<std::string>& names,
                                  std::size_t num_events) {
  std::vector<CvRow> rows;
  for (const auto& name : names) {
    CvRow row;
    row.name = name;
    row.event_f1.assign(num_events, 0.0);
    row.event_er.assign(num_events, 0.0);
    for (const auto& run : runs) {
      if (run.name != name) continue;
      ++row.runs;
      row.mean_f1 += run.report.f1.value;
      row.mean_er += run.report.er.value;
      for (std::size_t m = 0; m < num_events && m < run.report.per_event.size(); ++m) {
        row.event_f1[m] += run.report.per_event[m].f1.value;
        row.event_er[m] += run.report.per_event[m].er.value;
      }
    }
    if (row.runs > 0) {
      const double n = static_cast<double>(row.runs);
      row.mean_f1 /= n;
      row.mean_er /= n;
      for (double& v : row.event_f1) v /= n;
      for (double& v : row.event_er) v /= n;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json CvResult::to_json() const {
  json runs_json = json::array();
  for (const auto& r : runs) {
    runs_json.push_back({{"name", r.name},
                         {"fold", r.fold},
                         {"seed", r.seed},
                         {"epochs", r.epochs},
                         {"report", r.report.to_json()}});
  }
  json rows_json = json::array();
  for (const auto& row : rows) {
    json per_event = json::array();
    for (std::size_t m = 0; m < event_names.size(); ++m) {
      per_event.push_back(
          {{"event", event_names[m]}, {"f1", row.event_f1[m]}, {"er", row.event_er[m]}});
    }
    rows_json.push_back({{"name", row.name},
                         {"runs", row.runs},
                         {"f1", row.mean_f1},
                         {"er", row.mean_er},
                         {"per_event", per_event}});
  }
  return {{"summary", rows_json}, {"runs", runs_json}};
}

namespace {

std::string padded(std::string s, std::size_t width) {
  if (s.size() < width) s.resize(width, ' ');
  return s;
}

std::string number(const char* pattern, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

}  // namespace

std::string CvResult::comparison_table() const {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::ostringstream out;
  out << padded("Method", width) << "   F-score      ER   runs\n";
  out << std::string(width + 26, '-') << "\n";
  for (const auto& r : rows) {
    out << padded(r.name, width) << "  " << number("%7.2f%%", r.mean_f1) << "  "
        << number("%6.3f", r.mean_er) << "  " << number("%5.0f", static_cast<double>(r.runs))
        << "\n";
  }
  return out.str();
}

std::string CvResult::per_event_table() const {
  std::size_t width = 5;
  for (const auto& e : event_names) width = std::max(width, e.size());
  std::vector<std::size_t> cols;
  for (const auto& r : rows) cols.push_back(std::max<std::size_t>(8, r.name.size()));
  std::ostringstream out;
  out << padded("Event", width);
  for (std::size_t k = 0; k < rows.size(); ++k) out << "  " << padded(rows[k].name, cols[k]);
  out << "\n";
  for (std::size_t m = 0; m < event_names.size(); ++m) {
    out << padded(event_names[m], width);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      std::string v = number("%.2f%%", rows[k].event_f1[m]);
      out << "  " << std::string(cols[k] - std::min(cols[k], v.size()), ' ') << v;
    }
    out << "\n";
  }
  return out.str();
}

CvResult run_cross_validation(const Dataset& ds, const CvConfig& config,
                              std::size_t workers) {
  if (auto e = config.errors(); !e.empty()) throw ConfigError(std::move(e));
  std::vector<int> folds = config.folds;
  if (folds.empty()) {
    for (int f = 0; f < ds.num_folds; ++f) folds.push_back(f);
  }
  for (int f : folds) {
    if (f >= ds.num_folds) {
      throw ConfigError("fold " + std::to_string(f) + " is not in [0, " +
                        std::to_string(ds.num_folds) + ")");
    }
  }
  const bool need_teacher = std::any_of(config.runs.begin(), config.runs.end(),
                                        [](const CvRunSpec& r) {
                                          return r.config.mode == Mode::kMtlSoft;
                                        });

  struct Unit {
    int fold;
    std::uint64_t seed;
  };
  std::vector<Unit> units;
  for (int f : folds) {
    for (std::uint64_t s : config.seeds) units.push_back({f, s});
  }
  std::vector<std::vector<CvRun>> results(units.size());
  std::vector<std::exception_ptr> failures(units.size());

  auto run_unit = [&](std::size_t u) {
    const Unit unit = units[u];
    const Split split = make_split(ds, unit.fold);
    nn::Model teacher;
    if (need_teacher) {
      TrainConfig tc = config.teacher;
      tc.fold = unit.fold;
      tc.seed = unit.seed;
      teacher = train_teacher(ds, split, tc).model;
    }
    for (const auto& spec : config.runs) {
      TrainConfig rc = spec.config;
      rc.fold = unit.fold;
      rc.seed = unit.seed;
      SoftLabels soft;
      if (rc.mode == Mode::kMtlSoft) soft = compute_soft_labels(teacher, ds, rc.temperature);
      TrainResult trained = train_student(ds, split, rc, &soft);
      CvRun run;
      run.name = spec.name;
      run.fold = unit.fold;
      run.seed = unit.seed;
      run.epochs = trained.log.size();
      run.report = evaluate_clips(ds, split.test, split.val,
                                  model_predictor(trained.model, rc.chunk_len),
                                  config.evaluation);
      results[u].push_back(std::move(run));
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(workers, units.size()));
  if (threads == 1) {
    for (std::size_t u = 0; u < units.size(); ++u) run_unit(u);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t u = next++; u < units.size(); u = next++) {
          try {
            run_unit(u);
          } catch (...) {
            failures[u] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }

  CvResult out;
  out.event_names = ds.vocabulary.events;
  // Units are already in (fold, seed) order when folds and seeds are sorted;
  // sort explicitly so configured order does not matter.
  std::vector<std::size_t> idx(units.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(units[a].fold, units[a].seed) < std::tie(units[b].fold, units[b].seed);
  });
  for (std::size_t u : idx) {
    for (auto& r : results[u]) out.runs.push_back(std::move(r));
  }
  std::vector<std::string> names;
  for (const auto& r : config.runs) names.push_back(r.name);
  out.rows = aggregate_runs(out.runs, names, ds.vocabulary.num_events());
  return out;
}

}  // namespace sedkit::train
