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

#ifndef SEDKIT_TRAINING_HPP_
#define SEDKIT_TRAINING_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sedkit/dataset.hpp"
#include "sedkit/evaluation.hpp"
#include "sedkit/features.hpp"
#include "sedkit/networks.hpp"

namespace sedkit::train {

enum class Mode { kTeacher, kEventOnly, kMtlHard, kMtlSoft };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);

struct TrainConfig {
  Mode mode = Mode::kMtlSoft;
  double alpha = 0.0001;
  double beta = 1.0;
  double temperature = 1.0;
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 200;
  std::size_t patience = 20;
  std::uint64_t seed = 0;
  // Held-out test fold; validation uses (fold + 1) % K. -1 trains and
  // validates on every clip.
  int fold = 0;
  std::size_t chunk_len = 500;
  nn::NetSpec network;
  eval::EvalConfig evaluation;

  // Every violation, one message each.
  std::vector<std::string> errors() const;
  // Throws ConfigError listing every violation.
  void validate() const;
  nlohmann::json to_json() const;
  // Unknown keys, type errors and range errors are all collected before
  // throwing.
  static TrainConfig from_json(const nlohmann::json& j);
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  nn::ModelParams m;
  nn::ModelParams v;
  std::uint64_t step = 0;

  static AdamState for_params(const nn::ModelParams& params);
};

// Bias-corrected adaptive-moment update, in place.
void adam_step(nn::ModelParams& params, const nn::ModelParams& grads,
               AdamState& state, const AdamConfig& config = {});

struct ClipData {
  std::string clip_id;
  std::size_t scene = 0;
  int fold = -1;
  features::LogMelSpectrogram features;
  data::EventRoll roll;
};

struct Dataset {
  data::Vocabulary vocabulary;
  int num_folds = 0;
  std::vector<ClipData> clips;  // manifest order

  std::size_t index_of(const std::string& clip_id) const;
};

std::filesystem::path feature_cache_path(const std::filesystem::path& features_dir,
                                         const std::string& clip_id);

// Features come from `<features_dir>/<clip_id>.sdfc`; the manifest must have
// its annotations loaded. Missing or unreadable caches raise DataError.
Dataset load_dataset(const data::Manifest& manifest,
                     const std::filesystem::path& features_dir);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

Split make_split(const Dataset& dataset, int test_fold);

struct EpochRecord {
  std::size_t epoch = 0;
  nlohmann::json train_losses;
  nlohmann::json val_metrics;

  nlohmann::json to_json() const;
};

struct TrainResult {
  nn::Model model;  // parameters of the best validation epoch
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;

  // One JSON object per line, one line per epoch.
  std::string log_jsonl() const;
};

// Whole clips, hard scene labels. Early stops on validation accuracy (ties
// broken by lower validation loss).
TrainResult train_teacher(const Dataset& dataset, const Split& split,
                          const TrainConfig& config);

using SoftLabels = std::map<std::string, std::vector<double>>;

// softmax(teacher logits / T) for every clip in the dataset.
SoftLabels compute_soft_labels(const nn::Model& teacher, const Dataset& dataset,
                               double temperature);

std::string encode_soft_labels(const SoftLabels& labels);
SoftLabels decode_soft_labels(std::string_view text);
void write_soft_labels(const std::filesystem::path& path, const SoftLabels& labels);
SoftLabels read_soft_labels(const std::filesystem::path& path);

// Chunked training under the mode's objective. Early stops on validation
// segment F1 (ties broken by lower validation event loss). mtl_soft needs
// soft labels for every training clip.
TrainResult train_student(const Dataset& dataset, const Split& split,
                          const TrainConfig& config,
                          const SoftLabels* soft_labels = nullptr);

// Frame posteriors [M x N] for one clip.
using PosteriorFn = std::function<Tensor(const ClipData&)>;

PosteriorFn model_predictor(const nn::Model& student, std::size_t chunk_len);

// Binarizes with the configured policy and scores the `clips`. Calibrated
// thresholds are fitted on the `calibration` clips; classes never active there
// keep the fixed threshold.
eval::Report evaluate_clips(const Dataset& dataset,
                            const std::vector<std::size_t>& clips,
                            const std::vector<std::size_t>& calibration,
                            const PosteriorFn& predict,
                            const eval::EvalConfig& config);

struct StudentEvaluation {
  eval::Report report;
  double event_loss = 0.0;                 // summed E1, mean per clip
  double event_loss_per_frame_event = 0.0;
};

// Fixed-threshold scoring of a student, plus its event loss.
StudentEvaluation evaluate_student(const nn::Model& student, const Dataset& dataset,
                                   const std::vector<std::size_t>& clips,
                                   const eval::EvalConfig& config,
                                   std::size_t chunk_len);

double teacher_accuracy(const nn::Model& teacher, const Dataset& dataset,
                        const std::vector<std::size_t>& clips);

struct CvRunSpec {
  std::string name;
  TrainConfig config;
};

struct CvConfig {
  std::vector<int> folds;  // empty: every fold
  std::vector<std::uint64_t> seeds{0, 1, 2};
  TrainConfig teacher;     // used when some run is mtl_soft
  std::vector<CvRunSpec> runs;
  eval::EvalConfig evaluation;

  std::vector<std::string> errors() const;
  nlohmann::json to_json() const;
  static CvConfig from_json(const nlohmann::json& j);
};

struct CvRun {
  std::string name;
  int fold = 0;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  eval::Report report;
};

struct CvRow {
  std::string name;
  std::size_t runs = 0;
  double mean_f1 = 0.0;
  double mean_er = 0.0;
  std::vector<double> event_f1;  // mean over runs, per event
  std::vector<double> event_er;
};

struct CvResult {
  std::vector<std::string> event_names;
  std::vector<CvRun> runs;  // sorted by (fold, seed, run order)
  std::vector<CvRow> rows;  // one per configured run name

  nlohmann::json to_json() const;
  // One row per configuration: name, F-score, ER.
  std::string comparison_table() const;
  // Events down, configurations across.
  std::string per_event_table() const;
};

// Mean of per-run scores, per configuration and per event.
std::vector<CvRow> aggregate_runs(const std::vector<CvRun>& runs,
                                  const std::vector<std::string>& names,
                                  std::size_t num_events);

// Trains every (fold, seed, run) and evaluates on the held-out fold. `workers`
// > 1 spreads (fold, seed) units over threads; the result does not depend on
// the worker count.
CvResult run_cross_validation(const Dataset& dataset, const CvConfig& config,
                              std::size_t workers = 1);

}  // namespace sedkit::train

#endif  // SEDKIT_TRAINING_HPP_
