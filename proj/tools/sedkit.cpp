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

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sedkit/commands.hpp"

namespace {

std::size_t workers_from_env() {
  const char* v = std::getenv("SEDKIT_WORKERS");
  if (v == nullptr || *v == '\0') return 1;
  try {
    const long n = std::stol(v);
    return n > 0 ? static_cast<std::size_t>(n) : 1;
  } catch (const std::exception&) {
    std::cerr << "sedkit: ignoring SEDKIT_WORKERS=" << v << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace sedkit::cli;
  CLI::App app{"sedkit: sound event detection with scene-aware teacher-student training"};
  app.set_version_flag("--version", code_version());
  app.require_subcommand(1);

  IngestOptions ingest;
  std::string ingest_vocab;
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse metadata and annotations into a manifest");
  ingest_cmd->add_option("--metadata", ingest.metadata, "audio_path<TAB>scene per line")
      ->required();
  ingest_cmd->add_option("--annotations", ingest.annotations_dir,
                         "Directory with <clip_id>.ann files")
      ->required();
  ingest_cmd->add_option("--out", ingest.out_dir, "Output directory")->required();
  ingest_cmd->add_option("--vocabulary", ingest_vocab,
                         "Vocabulary JSON (default: sorted names found in the inputs)");
  ingest_cmd->add_option("--folds", ingest.num_folds, "Number of folds")
      ->capture_default_str();
  ingest_cmd->add_option("--fold-seed", ingest.fold_seed, "Fold shuffle seed")
      ->capture_default_str();

  FeaturesOptions feats;
  auto* feats_cmd = app.add_subcommand("features", "Extract log mel-band energies");
  feats_cmd->add_option("--manifest", feats.manifest)->required();
  feats_cmd->add_option("--out", feats.out_dir, "Feature cache directory")->required();

  TrainOptions trn;
  std::optional<std::uint64_t> trn_seed;
  std::optional<int> trn_fold;
  std::string trn_out;
  auto* train_cmd = app.add_subcommand("train", "Train a teacher or student from a JSON config");
  train_cmd->add_option("--config", trn.config)->required();
  train_cmd->add_option("--seed", trn_seed, "Override training.seed");
  train_cmd->add_option("--fold", trn_fold, "Override training.fold");
  train_cmd->add_option("--output", trn_out, "Override output directory");

  DistillOptions dst;
  auto* distill_cmd = app.add_subcommand("distill", "Write soft scene labels from a teacher");
  distill_cmd->add_option("--teacher", dst.teacher, "Teacher checkpoint")->required();
  distill_cmd->add_option("--manifest", dst.manifest)->required();
  distill_cmd->add_option("--features", dst.features)->required();
  distill_cmd->add_option("--out", dst.out, "Soft-label JSON file")->required();
  distill_cmd->add_option("--temperature,-T", dst.temperature)->capture_default_str();

  EvalOptions ev;
  std::string ev_config;
  auto* eval_cmd = app.add_subcommand("eval", "Score a student on a held-out fold");
  eval_cmd->add_option("--checkpoint", ev.checkpoint)->required();
  eval_cmd->add_option("--manifest", ev.manifest)->required();
  eval_cmd->add_option("--features", ev.features)->required();
  eval_cmd->add_option("--out", ev.out_dir, "Report directory")->required();
  eval_cmd->add_option("--fold", ev.fold, "Test fold (-1: every clip)")->capture_default_str();
  eval_cmd->add_option("--eval-config", ev_config, "Evaluation JSON");

  CvOptions cv;
  std::string cv_out;
  auto* cv_cmd = app.add_subcommand(
      "cv", "Cross-validate configurations (SEDKIT_WORKERS sets parallel runs)");
  cv_cmd->add_option("--config", cv.config)->required();
  cv_cmd->add_option("--output", cv_out, "Override output directory");

  SynthOptions syn;
  auto* synth_cmd = app.add_subcommand("synth-fixture", "Write the synthetic test corpus");
  synth_cmd->add_option("--out", syn.out_dir)->required();
  synth_cmd->add_option("--clips-per-scene", syn.clips_per_scene)->capture_default_str();
  synth_cmd->add_option("--seconds", syn.clip_seconds)->capture_default_str();
  synth_cmd->add_option("--seed", syn.seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  auto& out = std::cout;
  auto& err = std::cerr;
  if (*ingest_cmd) {
    if (!ingest_vocab.empty()) ingest.vocabulary = ingest_vocab;
    return cmd_ingest(ingest, out, err);
  }
  if (*feats_cmd) return cmd_features(feats, out, err);
  if (*train_cmd) {
    trn.seed = trn_seed;
    trn.fold = trn_fold;
    if (!trn_out.empty()) trn.output = trn_out;
    return cmd_train(trn, out, err);
  }
  if (*distill_cmd) return cmd_distill(dst, out, err);
  if (*eval_cmd) {
    if (!ev_config.empty()) ev.eval_config = ev_config;
    return cmd_eval(ev, out, err);
  }
  if (*cv_cmd) {
    if (!cv_out.empty()) cv.output = cv_out;
    cv.workers = workers_from_env();
    return cmd_cv(cv, out, err);
  }
  if (*synth_cmd) return cmd_synth_fixture(syn, out, err);
  return 1;
}
