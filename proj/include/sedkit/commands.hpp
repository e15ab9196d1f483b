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

#ifndef SEDKIT_COMMANDS_HPP_
#define SEDKIT_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sedkit/evaluation.hpp"
#include "sedkit/training.hpp"

namespace sedkit::cli {

std::string code_version();

struct FileDigest {
  std::string path;
  std::string sha256;
};

// Provenance record written next to every command's outputs.
struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  std::string code_version;
  std::string started_at;   // UTC, ISO 8601
  std::string finished_at;
  double wall_seconds = 0.0;

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  // Paths whose current digest differs from the recorded one.
  std::vector<std::string> stale_files() const;
};

void write_run_manifest(const std::filesystem::path& path, RunManifest manifest);
RunManifest read_run_manifest(const std::filesystem::path& path);

// Every command returns a process exit code: 0 iff no errors. Human-readable
// summaries go to `out`; diagnostics go to `err`.

struct IngestOptions {
  std::filesystem::path metadata;
  std::filesystem::path annotations_dir;  // <clip_id>.ann per clip
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> vocabulary;  // default: derived
  int num_folds = 4;
  std::uint64_t fold_seed = 0;
};

int cmd_ingest(const IngestOptions& options, std::ostream& out, std::ostream& err);

struct FeaturesOptions {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
};

int cmd_features(const FeaturesOptions& options, std::ostream& out, std::ostream& err);

struct TrainOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<int> fold;
  std::optional<std::filesystem::path> output;
};

// Config file: {"manifest", "features", "output", "soft_labels"?, "training"}.
// Relative paths resolve against the config file's directory.
int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err);

struct DistillOptions {
  std::filesystem::path teacher;
  std::filesystem::path manifest;
  std::filesystem::path features;
  std::filesystem::path out;
  double temperature = 1.0;
};

int cmd_distill(const DistillOptions& options, std::ostream& out, std::ostream& err);

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path manifest;
  std::filesystem::path features;
  std::filesystem::path out_dir;
  int fold = 0;  // -1 scores every clip
  std::optional<std::filesystem::path> eval_config;
};

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);

// cmd_eval with the checkpoint replaced by `predict`.
int run_eval(const EvalOptions& options, const train::PosteriorFn& predict,
             std::ostream& out, std::ostream& err);

struct CvOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> output;
  std::size_t workers = 1;
};

// Config file: CvConfig fields plus "manifest", "features", "output".
int cmd_cv(const CvOptions& options, std::ostream& out, std::ostream& err);

struct SynthOptions {
  std::filesystem::path out_dir;
  std::size_t clips_per_scene = 2;
  double clip_seconds = 3.0;
  std::uint64_t seed = 0;
};

// Writes the synthetic corpus plus ready-to-run configs for it.
int cmd_synth_fixture(const SynthOptions& options, std::ostream& out,
                      std::ostream& err);

// Training settings that fit the synthetic corpus on one CPU.
train::TrainConfig fixture_teacher_config();
train::TrainConfig fixture_student_config(train::Mode mode);

}  // namespace sedkit::cli

#endif  // SEDKIT_COMMANDS_HPP_
