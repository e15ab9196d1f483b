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

#ifndef SEDKIT_FIXTURE_HPP_
#define SEDKIT_FIXTURE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sedkit/dataset.hpp"

namespace sedkit::fixture {

// A small synthetic corpus: each scene has its own background noise colour,
// each scene owns one tone event, and one shared tone occurs in every scene.
struct FixtureSpec {
  int sample_rate = 16000;
  double clip_seconds = 3.0;
  std::size_t clips_per_scene = 2;
  std::uint64_t seed = 0;
};

struct FixturePaths {
  std::filesystem::path root;
  std::filesystem::path audio_dir;
  std::filesystem::path annotations_dir;
  std::filesystem::path metadata;
  std::filesystem::path vocabulary;
};

data::Vocabulary fixture_vocabulary();

// Annotations of clip `index` (0-based) within scene `scene`.
std::vector<data::EventAnnotation> fixture_events(std::size_t scene,
                                                  std::size_t index,
                                                  const FixtureSpec& spec);

FixturePaths write_fixture(const std::filesystem::path& root,
                           const FixtureSpec& spec = {});

}  // namespace sedkit::fixture

#endif  // SEDKIT_FIXTURE_HPP_
