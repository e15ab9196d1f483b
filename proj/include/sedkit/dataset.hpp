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

#ifndef SEDKIT_DATASET_HPP_
#define SEDKIT_DATASET_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sedkit/tensor.hpp"

namespace sedkit::data {

// Ordered scene and event names. Indices are positions in these lists and
// are fixed once the vocabulary is written.
struct Vocabulary {
  std::vector<std::string> scenes;
  std::vector<std::string> events;

  std::size_t num_scenes() const { return scenes.size(); }
  std::size_t num_events() const { return events.size(); }
  // Throws VocabularyError naming the missing entry.
  std::size_t scene_index(std::string_view name) const;
  std::size_t event_index(std::string_view name) const;
  void validate() const;

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);
};

struct EventAnnotation {
  double onset = 0.0;   // seconds, inclusive
  double offset = 0.0;  // seconds, exclusive
  std::size_t event = 0;

  bool operator==(const EventAnnotation&) const = default;
};

struct ClipRecord {
  std::string clip_id;
  std::string audio_path;
  std::string annotation_path;
  std::size_t scene = 0;
  std::vector<EventAnnotation> events;
  int fold = -1;
};

// One record per line: audio_path TAB scene_name. Blank lines and lines
// starting with '#' are skipped. clip_id is the audio file's stem.
std::vector<ClipRecord> parse_metadata(std::string_view tsv,
                                       const Vocabulary& vocab);

// One event per line: onset TAB offset TAB event_name (seconds). Result is
// sorted by onset; overlapping events are kept.
std::vector<EventAnnotation> parse_event_annotations(std::string_view tsv,
                                                     const Vocabulary& vocab,
                                                     const std::string& clip_id);

// Binary [classes x frames] activity matrix.
class EventRoll {
 public:
  EventRoll() = default;
  EventRoll(std::size_t classes, std::size_t frames, double hop_seconds);

  std::size_t classes() const { return classes_; }
  std::size_t frames() const { return frames_; }
  double hop_seconds() const { return hop_seconds_; }

  std::uint8_t at(std::size_t m, std::size_t n) const {
    return data_[m * frames_ + n];
  }
  void set(std::size_t m, std::size_t n, bool active) {
    data_[m * frames_ + n] = active ? 1 : 0;
  }
  const std::vector<std::uint8_t>& data() const { return data_; }

  bool operator==(const EventRoll&) const = default;

 private:
  std::size_t classes_ = 0;
  std::size_t frames_ = 0;
  double hop_seconds_ = 0.0;
  std::vector<std::uint8_t> data_;
};

struct RollStats {
  std::size_t clipped_events = 0;  // events extending past the last frame
  std::size_t dropped_events = 0;  // events starting after the last frame
};

// Frame n is active for class m iff some annotation of class m has
// onset <= (n + 0.5) * hop < offset.
EventRoll events_to_roll(const std::vector<EventAnnotation>& events,
                         std::size_t num_classes, std::size_t frames,
                         double hop_seconds, RollStats* stats = nullptr);

// Maximal runs of active frames mapped back to [start * hop, end * hop).
std::vector<EventAnnotation> roll_to_intervals(const EventRoll& roll);

struct FoldSplit {
  int num_folds = 0;
  std::map<std::string, int> fold_of;

  std::vector<std::string> clips_in(int fold) const;
};

// Scene-stratified assignment: within each scene the clips are shuffled by
// `seed` and dealt round-robin, continuing from where the previous scene
// stopped so that fold sizes stay balanced.
FoldSplit make_folds(const std::vector<ClipRecord>& records, int num_folds,
                     std::uint64_t seed);

// Fixed-length training window. Frames past `valid` are zero padding.
struct Chunk {
  std::size_t clip = 0;   // index into the caller's clip list
  std::size_t start = 0;  // first source frame
  std::size_t valid = 0;
  Tensor features;        // [bands x chunk_len]
  EventRoll roll;         // [classes x chunk_len]
  std::vector<std::uint8_t> mask;  // 1 for source frames, 0 for padding
};

std::vector<Chunk> chunk_clip(const Tensor& features, const EventRoll& roll,
                              std::size_t chunk_len, std::size_t clip = 0);

// Ingestion result written as manifest.json next to vocabulary.json.
struct Manifest {
  Vocabulary vocabulary;
  std::vector<ClipRecord> clips;  // sorted by clip_id
  int num_folds = 0;
  std::uint64_t fold_seed = 0;

  const ClipRecord& clip(const std::string& clip_id) const;
  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& j);
};

Manifest load_manifest(const std::filesystem::path& path);
// Reads each clip's annotation file into ClipRecord::events.
void load_annotations(Manifest& manifest);

}  // namespace sedkit::data

#endif  // SEDKIT_DATASET_HPP_
