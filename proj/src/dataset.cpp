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

#include "sedkit/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <set>

#include "sedkit/error.hpp"
#include "sedkit/io.hpp"

namespace sedkit::data {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t Vocabulary::scene_index(std::string_view name) const {
  auto it = std::find(scenes.begin(), scenes.end(), name);
  if (it == scenes.end()) {
    throw VocabularyError("unknown scene \"" + std::string(name) + "\"");
  }
  return static_cast<std::size_t>(it - scenes.begin());
}

std::size_t Vocabulary::event_index(std::string_view name) const {
  auto it = std::find(events.begin(), events.end(), name);
  if (it == events.end()) {
    throw VocabularyError("unknown event \"" + std::string(name) + "\"");
  }
  return static_cast<std::size_t>(it - events.begin());
}

void Vocabulary::validate() const {
  auto check = [](const std::vector<std::string>& names, const char* kind) {
    std::set<std::string> seen;
    for (const auto& n : names) {
      if (n.empty()) throw VocabularyError(std::string("empty ") + kind + " name");
      if (!seen.insert(n).second) {
        throw VocabularyError(std::string("duplicate ") + kind + " \"" + n + "\"");
      }
    }
  };
  check(scenes, "scene");
  check(events, "event");
}

json Vocabulary::to_json() const {
  return json{{"scenes", scenes}, {"events", events}};
}

Vocabulary Vocabulary::from_json(const json& j) {
  Vocabulary v;
  v.scenes = j.at("scenes").get<std::vector<std::string>>();
  v.events = j.at("events").get<std::vector<std::string>>();
  v.validate();
  return v;
}

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find('\t', start);
    if (end == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, end - start));
    start = end + 1;
  }
}

bool skippable(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos ||
         line.front() == '#';
}

double parse_seconds(std::string_view field, std::size_t line_no) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ParseError("expected a time in seconds, got \"" + std::string(field) +
                     "\"", line_no);
  }
  return v;
}

}  // namespace

std::vector<ClipRecord> parse_metadata(std::string_view tsv,
                                       const Vocabulary& vocab) {
  std::vector<ClipRecord> records;
  std::vector<std::string> unknown;
  std::set<std::string> ids;
  const auto lines = split_lines(tsv);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (skippable(lines[i])) continue;
    const auto fields = split_tabs(lines[i]);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw ParseError("expected \"audio_path<TAB>scene\"", line_no);
    }
    ClipRecord rec;
    rec.audio_path = std::string(fields[0]);
    rec.clip_id = fs::path(rec.audio_path).stem().string();
    if (!ids.insert(rec.clip_id).second) {
      throw ParseError("duplicate clip \"" + rec.clip_id + "\"", line_no);
    }
    auto it = std::find(vocab.scenes.begin(), vocab.scenes.end(), fields[1]);
    if (it == vocab.scenes.end()) {
      unknown.push_back("\"" + std::string(fields[1]) + "\" (line " +
                        std::to_string(line_no) + ")");
      continue;
    }
    rec.scene = static_cast<std::size_t>(it - vocab.scenes.begin());
    records.push_back(std::move(rec));
  }
  if (!unknown.empty()) {
    std::string msg = "unknown scene";
    msg += unknown.size() > 1 ? "s: " : ": ";
    for (std::size_t i = 0; i < unknown.size(); ++i) {
      if (i) msg += ", ";
      msg += unknown[i];
    }
    throw VocabularyError(msg);
  }
  return records;
}

std::vector<EventAnnotation> parse_event_annotations(std::string_view tsv,
                                                     const Vocabulary& vocab,
                                                     const std::string& clip_id) {
  std::vector<EventAnnotation> events;
  const auto lines = split_lines(tsv);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (skippable(lines[i])) continue;
    const auto fields = split_tabs(lines[i]);
    if (fields.size() != 3) {
      throw ParseError(clip_id + ": expected \"onset<TAB>offset<TAB>event\"",
                       line_no);
    }
    EventAnnotation ev;
    ev.onset = parse_seconds(fields[0], line_no);
    ev.offset = parse_seconds(fields[1], line_no);
    if (ev.onset < 0.0 || ev.offset <= ev.onset) {
      throw ParseError(clip_id + ": need 0 <= onset < offset, got " +
                       std::string(fields[0]) + " .. " + std::string(fields[1]),
                       line_no);
    }
    try {
      ev.event = vocab.event_index(fields[2]);
    } catch (const VocabularyError& e) {
      throw VocabularyError(clip_id + " line " + std::to_string(line_no) +
                            ": " + e.what());
    }
    events.push_back(ev);
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const EventAnnotation& a, const EventAnnotation& b) {
                     return a.onset < b.onset;
                   });
  return events;
}

EventRoll::EventRoll(std::size_t classes, std::size_t frames,
                     double hop_seconds)
    : classes_(classes),
      frames_(frames),
      hop_seconds_(hop_seconds),
      data_(classes * frames, 0) {}

EventRoll events_to_roll(const std::vector<EventAnnotation>& events,
                         std::size_t num_classes, std::size_t frames,
                         double hop_seconds, RollStats* stats) {
  if (frames == 0) throw ArgumentError("event roll needs at least one frame");
  if (!(hop_seconds > 0.0)) throw ArgumentError("hop must be positive");
  EventRoll roll(num_classes, frames, hop_seconds);
  const double clip_end = static_cast<double>(frames) * hop_seconds;
  for (const auto& ev : events) {
    if (ev.event >= num_classes) {
      throw ArgumentError("event class " + std::to_string(ev.event) +
                          " outside vocabulary of " + std::to_string(num_classes));
    }
    if (stats) {
      if (ev.onset >= clip_end) {
        ++stats->dropped_events;
      } else if (ev.offset > clip_end) {
        ++stats->clipped_events;
      }
    }
    // Candidate frames around the interval, then the exact center test.
    const double first = std::floor(ev.onset / hop_seconds - 0.5);
    const double last = std::ceil(ev.offset / hop_seconds - 0.5);
    const auto lo = static_cast<std::size_t>(std::max(0.0, first));
    const auto hi = static_cast<std::size_t>(
        std::clamp(last, 0.0, static_cast<double>(frames - 1)));
    for (std::size_t n = lo; n <= hi && n < frames; ++n) {
      const double center = (static_cast<double>(n) + 0.5) * hop_seconds;
      if (ev.onset <= center && center < ev.offset) roll.set(ev.event, n, true);
    }
  }
  return roll;
}

std::vector<EventAnnotation> roll_to_intervals(const EventRoll& roll) {
  std::vector<EventAnnotation> out;
  const double hop = roll.hop_seconds();
  for (std::size_t m = 0; m < roll.classes(); ++m) {
    std::size_t n = 0;
    while (n < roll.frames()) {
      if (!roll.at(m, n)) {
        ++n;
        continue;
      }
      const std::size_t start = n;
      while (n < roll.frames() && roll.at(m, n)) ++n;
      out.push_back({static_cast<double>(start) * hop,
                     static_cast<double>(n) * hop, m});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const EventAnnotation& a, const EventAnnotation& b) {
                     return a.onset < b.onset;
                   });
  return out;
}

std::vector<std::string> FoldSplit::clips_in(int fold) const {
  std::vector<std::string> ids;
  for (const auto& [id, f] : fold_of) {
    if (f == fold) ids.push_back(id);
  }
  return ids;
}

FoldSplit make_folds(const std::vector<ClipRecord>& records, int num_folds,
                     std::uint64_t seed) {
  if (num_folds < 1) throw ArgumentError("need at least one fold");
  if (records.size() < static_cast<std::size_t>(num_folds)) {
    throw ArgumentError("cannot split " + std::to_string(records.size()) +
                        " clips into " + std::to_string(num_folds) + " folds");
  }
  std::map<std::size_t, std::vector<std::string>> by_scene;
  for (const auto& r : records) by_scene[r.scene].push_back(r.clip_id);

  FoldSplit split;
  split.num_folds = num_folds;
  std::mt19937_64 rng(seed);
  std::size_t next = 0;
  for (auto& [scene, ids] : by_scene) {
    std::sort(ids.begin(), ids.end());
    std::shuffle(ids.begin(), ids.end(), rng);
    for (const auto& id : ids) {
      split.fold_of[id] = static_cast<int>(next % num_folds);
      ++next;
    }
  }
  return split;
}

std::vector<Chunk> chunk_clip(const Tensor& features, const EventRoll& roll,
                              std::size_t chunk_len, std::size_t clip) {
  if (chunk_len == 0) throw ArgumentError("chunk length must be positive");
  if (features.rank() != 2 || features.dim(1) != roll.frames()) {
    throw DimensionError("features " + shape_to_string(features.shape()) +
                         " and event roll with " +
                         std::to_string(roll.frames()) +
                         " frames do not share a time axis");
  }
  const std::size_t d = features.dim(0), n = features.dim(1);
  std::vector<Chunk> chunks;
  for (std::size_t start = 0; start < n; start += chunk_len) {
    Chunk c;
    c.clip = clip;
    c.start = start;
    c.valid = std::min(chunk_len, n - start);
    c.features = Tensor({d, chunk_len});
    c.roll = EventRoll(roll.classes(), chunk_len, roll.hop_seconds());
    c.mask.assign(chunk_len, 0);
    for (std::size_t t = 0; t < c.valid; ++t) {
      c.mask[t] = 1;
      for (std::size_t b = 0; b < d; ++b) {
        c.features.at(b, t) = features.at(b, start + t);
      }
      for (std::size_t m = 0; m < roll.classes(); ++m) {
        c.roll.set(m, t, roll.at(m, start + t));
      }
    }
    chunks.push_back(std::move(c));
  }
  return chunks;
}

const ClipRecord& Manifest::clip(const std::string& clip_id) const {
  for (const auto& c : clips) {
    if (c.clip_id == clip_id) return c;
  }
  throw DataError("clip \"" + clip_id + "\" is not in the manifest");
}

json Manifest::to_json() const {
  json clips_json = json::object();
  for (const auto& c : clips) {
    clips_json[c.clip_id] = json{{"audio_path", c.audio_path},
                                 {"annotation_path", c.annotation_path},
                                 {"scene", vocabulary.scenes.at(c.scene)},
                                 {"fold", c.fold}};
  }
  return json{{"format", "sedkit-manifest"},
              {"version", 1},
              {"vocabulary", vocabulary.to_json()},
              {"num_folds", num_folds},
              {"fold_seed", fold_seed},
              {"clips", clips_json}};
}

Manifest Manifest::from_json(const json& j) {
  if (j.value("format", "") != "sedkit-manifest") {
    throw ParseError("not a sedkit manifest");
  }
  Manifest m;
  m.vocabulary = Vocabulary::from_json(j.at("vocabulary"));
  m.num_folds = j.at("num_folds").get<int>();
  m.fold_seed = j.at("fold_seed").get<std::uint64_t>();
  for (const auto& [id, c] : j.at("clips").items()) {
    ClipRecord rec;
    rec.clip_id = id;
    rec.audio_path = c.at("audio_path").get<std::string>();
    rec.annotation_path = c.at("annotation_path").get<std::string>();
    rec.scene = m.vocabulary.scene_index(c.at("scene").get<std::string>());
    rec.fold = c.at("fold").get<int>();
    if (rec.fold < 0 || rec.fold >= m.num_folds) {
      throw ParseError("clip \"" + id + "\" has fold " +
                       std::to_string(rec.fold) + " outside [0, " +
                       std::to_string(m.num_folds) + ")");
    }
    m.clips.push_back(std::move(rec));
  }
  return m;
}

Manifest load_manifest(const fs::path& path) {
  try {
    return Manifest::from_json(json::parse(io::read_file(path)));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void load_annotations(Manifest& manifest) {
  for (auto& c : manifest.clips) {
    if (!fs::exists(c.annotation_path)) {
      throw DataError("clip \"" + c.clip_id + "\": annotation file " +
                      c.annotation_path + " not found");
    }
    c.events = parse_event_annotations(io::read_file(c.annotation_path),
                                       manifest.vocabulary, c.clip_id);
  }
}

}  // namespace sedkit::data
