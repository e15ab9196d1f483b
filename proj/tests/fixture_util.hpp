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

#ifndef SEDKIT_TESTS_FIXTURE_UTIL_HPP_
#define SEDKIT_TESTS_FIXTURE_UTIL_HPP_

#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>

#include <unistd.h>

#include "sedkit/commands.hpp"
#include "sedkit/dataset.hpp"
#include "sedkit/training.hpp"

namespace sedkit::testing {

// Fresh per-process scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("sedkit_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

struct PreparedFixture {
  std::filesystem::path root;
  std::filesystem::path manifest;
  std::filesystem::path features;
};

// Synthetic corpus, ingested and feature-extracted through the commands.
inline PreparedFixture prepare_fixture(const std::filesystem::path& root) {
  std::ostringstream out, err;
  cli::SynthOptions synth;
  synth.out_dir = root;
  if (cli::cmd_synth_fixture(synth, out, err) != 0) throw std::runtime_error(err.str());
  cli::IngestOptions ingest;
  ingest.metadata = root / "metadata.tsv";
  ingest.annotations_dir = root / "annotations";
  ingest.vocabulary = root / "vocabulary.json";
  ingest.out_dir = root / "work";
  if (cli::cmd_ingest(ingest, out, err) != 0) throw std::runtime_error(err.str());
  cli::FeaturesOptions feats{root / "work" / "manifest.json", root / "work" / "features"};
  if (cli::cmd_features(feats, out, err) != 0) throw std::runtime_error(err.str());
  return {root, feats.manifest, feats.out_dir};
}

inline train::Dataset load_fixture_dataset(const PreparedFixture& f) {
  data::Manifest m = data::load_manifest(f.manifest);
  data::load_annotations(m);
  return train::load_dataset(m, f.features);
}

}  // namespace sedkit::testing

#endif  // SEDKIT_TESTS_FIXTURE_UTIL_HPP_
