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

#include "sedkit/commands.hpp"

#include <chrono>
#include <ctime>
#include <map>
#include <ostream>
#include <set>

#include "sedkit/audio.hpp"
#include "sedkit/dataset.hpp"
#include "sedkit/error.hpp"
#include "sedkit/features.hpp"
#include "sedkit/fixture.hpp"
#include "sedkit/io.hpp"

#ifndef SEDKIT_VERSION
#define SEDKIT_VERSION "0.0.0"
#endif

namespace sedkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string code_version() { return SEDKIT_VERSION; }

// ---------------------------------------------------------------------------
// Run manifests

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

FileDigest digest_of(const fs::path& path) {
  return {fs::absolute(path).lexically_normal().string(), io::file_sha256(path)};
}

class Stopwatch {
 public:
  Stopwatch() : started_(utc_now()), t0_(std::chrono::steady_clock::now()) {}

  void stamp(RunManifest& m) const {
    m.code_version = code_version();
    m.started_at = started_;
    m.finished_at = utc_now();
    m.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::string started_;
  std::chrono::steady_clock::time_point t0_;
};

json digests_json(const std::vector<FileDigest>& files) {
  json out = json::array();
  for (const auto& f : files) out.push_back({{"path", f.path}, {"sha256", f.sha256}});
  return out;
}

std::vector<FileDigest> digests_from_json(const json& j) {
  std::vector<FileDigest> out;
  for (const auto& f : j) {
    out.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>()});
  }
  return out;
}

}  // namespace

void RunManifest::add_input(const fs::path& path) { inputs.push_back(digest_of(path)); }

void RunManifest::add_output(const fs::path& path) { outputs.push_back(digest_of(path)); }

json RunManifest::to_json() const {
  return {{"format", "sedkit-run"},
          {"command", command},
          {"config", config},
          {"inputs", digests_json(inputs)},
          {"outputs", digests_json(outputs)},
          {"code_version", code_version},
          {"started_at", started_at},
          {"finished_at", finished_at},
          {"wall_seconds", wall_seconds}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.config = j.at("config");
    m.inputs = digests_from_json(j.at("inputs"));
    m.outputs = digests_from_json(j.at("outputs"));
    m.code_version = j.at("code_version").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.wall_seconds = j.at("wall_seconds").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("run manifest: ") + e.what());
  }
  return m;
}

std::vector<std::string> RunManifest::stale_files() const {
  std::vector<std::string> stale;
  for (const auto* list : {&inputs, &outputs}) {
    for (const auto& f : *list) {
      if (!fs::exists(f.path) || io::file_sha256(f.path) != f.sha256) {
        stale.push_back(f.path);
      }
    }
  }
  return stale;
}

void write_run_manifest(const fs::path& path, RunManifest manifest) {
  io::write_file(path, manifest.to_json().dump(2) + "\n");
}

RunManifest read_run_manifest(const fs::path& path) {
  try {
    return RunManifest::from_json(json::parse(io::read_file(path)));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

namespace {

json read_json_file(const fs::path& path) {
  try {
    return json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) {
  io::write_file(path, j.dump(2) + "\n");
}

fs::path resolve(const fs::path& base_dir, const fs::path& p) {
  if (p.is_absolute()) return p.lexically_normal();
  return fs::absolute(base_dir / p).lexically_normal();
}

// Runs `body`, reporting any toolkit error on `err` with a command prefix.
template <typename Fn>
int guarded(const char* command, std::ostream& err, Fn&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << command << ": invalid configuration\n";
    for (const auto& issue : e.issues()) err << "  - " << issue << "\n";
  } catch (const std::exception& e) {
    err << command << ": error: " << e.what() << "\n";
  }
  return 1;
}

std::vector<std::vector<std::string>> tsv_rows(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] != '#') {
      std::vector<std::string> fields;
      std::size_t p = 0;
      while (true) {
        const std::size_t q = line.find('\t', p);
        fields.push_back(line.substr(p, q == std::string::npos ? std::string::npos : q - p));
        if (q == std::string::npos) break;
        p = q + 1;
      }
      rows.push_back(std::move(fields));
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  return rows;
}

fs::path annotation_file(const fs::path& dir, const std::string& clip_id) {
  return dir / (clip_id + ".ann");
}

}  // namespace

// ---------------------------------------------------------------------------
// ingest

int cmd_ingest(const IngestOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded("ingest", err, [&]() -> int {
    Stopwatch watch;
    RunManifest run;
    run.command = "ingest";
    const fs::path metadata = fs::absolute(opt.metadata);
    const fs::path ann_dir = fs::absolute(opt.annotations_dir);
    const std::string meta_text = io::read_file(metadata);
    run.add_input(metadata);

    // Clip ids in metadata order, for vocabulary derivation.
    std::vector<std::string> stems;
    for (const auto& row : tsv_rows(meta_text)) {
      if (!row.empty()) stems.push_back(fs::path(row[0]).stem().string());
    }

    data::Vocabulary vocab;
    if (opt.vocabulary) {
      vocab = data::Vocabulary::from_json(read_json_file(*opt.vocabulary));
      run.add_input(*opt.vocabulary);
    } else {
      std::set<std::string> scenes, events;
      for (const auto& row : tsv_rows(meta_text)) {
        if (row.size() == 2) scenes.insert(row[1]);
      }
      for (const auto& id : stems) {
        const fs::path p = annotation_file(ann_dir, id);
        if (!fs::exists(p)) continue;  // reported below
        for (const auto& row : tsv_rows(io::read_file(p))) {
          if (row.size() == 3) events.insert(row[2]);
        }
      }
      vocab.scenes.assign(scenes.begin(), scenes.end());
      vocab.events.assign(events.begin(), events.end());
    }
    vocab.validate();

    std::vector<data::ClipRecord> records;
    try {
      records = data::parse_metadata(meta_text, vocab);
    } catch (const Error& e) {
      err << "ingest: " << metadata.string() << ": " << e.what() << "\n";
      return 1;
    }

    int failures = 0;
    const fs::path meta_dir = metadata.parent_path();
    for (auto& rec : records) {
      rec.audio_path = resolve(meta_dir, rec.audio_path).string();
      const fs::path ann = annotation_file(ann_dir, rec.clip_id);
      rec.annotation_path = ann.string();
      if (!fs::exists(ann)) {
        err << "ingest: clip \"" << rec.clip_id << "\": annotation file " << ann.string()
            << " not found\n";
        ++failures;
        continue;
      }
      try {
        rec.events = data::parse_event_annotations(io::read_file(ann), vocab, rec.clip_id);
        run.add_input(ann);
      } catch (const Error& e) {
        err << "ingest: " << ann.string() << ": " << e.what() << "\n";
        ++failures;
      }
    }
    if (failures > 0) return 1;

    const data::FoldSplit folds = data::make_folds(records, opt.num_folds, opt.fold_seed);
    data::Manifest manifest;
    manifest.vocabulary = vocab;
    manifest.num_folds = opt.num_folds;
    manifest.fold_seed = opt.fold_seed;
    for (auto& rec : records) rec.fold = folds.fold_of.at(rec.clip_id);
    std::sort(records.begin(), records.end(),
              [](const auto& a, const auto& b) { return a.clip_id < b.clip_id; });
    manifest.clips = records;

    fs::create_directories(opt.out_dir);
    const fs::path manifest_path = opt.out_dir / "manifest.json";
    const fs::path vocab_path = opt.out_dir / "vocabulary.json";
    const fs::path folds_path = opt.out_dir / "folds.json";
    write_json_file(manifest_path, manifest.to_json());
    write_json_file(vocab_path, vocab.to_json());
    json folds_json{{"num_folds", opt.num_folds}, {"seed", opt.fold_seed}};
    for (int f = 0; f < opt.num_folds; ++f) folds_json["folds"].push_back(folds.clips_in(f));
    write_json_file(folds_path, folds_json);

    run.config = {{"metadata", metadata.string()},
                  {"annotations_dir", ann_dir.string()},
                  {"vocabulary", opt.vocabulary ? opt.vocabulary->string() : "derived"},
                  {"num_folds", opt.num_folds},
                  {"fold_seed", opt.fold_seed}};
    run.add_output(manifest_path);
    run.add_output(vocab_path);
    run.add_output(folds_path);
    watch.stamp(run);
    write_run_manifest(opt.out_dir / "run_manifest.json", run);

    // Scene x event occurrence summary.
    out << records.size() << " clips, " << vocab.num_scenes() << " scenes, "
        << vocab.num_events() << " events, " << opt.num_folds << " folds\n";
    std::vector<std::size_t> per_scene(vocab.num_scenes(), 0);
    std::vector<std::vector<std::size_t>> occ(
        vocab.num_events(), std::vector<std::size_t>(vocab.num_scenes(), 0));
    for (const auto& rec : records) {
      ++per_scene[rec.scene];
      for (const auto& ev : rec.events) ++occ[ev.event][rec.scene];
    }
    std::size_t width = 12;
    for (const auto& e : vocab.events) width = std::max(width, e.size() + 2);
    auto pad = [](std::string s, std::size_t w) {
      if (s.size() < w) s.resize(w, ' ');
      return s;
    };
    out << pad("", width);
    for (const auto& s : vocab.scenes) out << pad(s, std::max<std::size_t>(10, s.size() + 2));
    out << "\n" << pad("clips", width);
    for (std::size_t c = 0; c < vocab.num_scenes(); ++c) {
      out << pad(std::to_string(per_scene[c]),
                 std::max<std::size_t>(10, vocab.scenes[c].size() + 2));
    }
    out << "\n";
    for (std::size_t m = 0; m < vocab.num_events(); ++m) {
      out << pad(vocab.events[m], width);
      for (std::size_t c = 0; c < vocab.num_scenes(); ++c) {
        out << pad(std::to_string(occ[m][c]),
                   std::max<std::size_t>(10, vocab.scenes[c].size() + 2));
      }
      out << "\n";
    }
    return 0;
  });
}

// ---------------------------------------------------------------------------
// features

int cmd_features(const FeaturesOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded("features", err, [&]() -> int {
    Stopwatch watch;
    RunManifest run;
    run.command = "features";
    const data::Manifest manifest = data::load_manifest(opt.manifest);
    run.add_input(opt.manifest);
    fs::create_directories(opt.out_dir);
    const fs::path index_path = opt.out_dir / "index.json";

    json index = json::object();
    if (fs::exists(index_path)) {
      try {
        index = read_json_file(index_path).at("clips");
      } catch (const std::exception&) {
        index = json::object();  // rebuilt below
      }
    }

    std::size_t extracted = 0, skipped = 0, failed = 0;
    json new_index = json::object();
    for (const auto& rec : manifest.clips) {
      const fs::path cache = train::feature_cache_path(opt.out_dir, rec.clip_id);
      try {
        const std::string audio_digest = io::file_sha256(rec.audio_path);
        bool fresh = false;
        if (index.contains(rec.clip_id) && fs::exists(cache)) {
          const json& entry = index.at(rec.clip_id);
          if (entry.value("audio_sha256", "") == audio_digest &&
              entry.value("cache_sha256", "") == io::file_sha256(cache)) {
            try {
              features::read_feature_cache(cache, rec.clip_id);
              fresh = true;
            } catch (const Error&) {
              fresh = false;
            }
          }
        }
        if (fresh) {
          new_index[rec.clip_id] = index.at(rec.clip_id);
          ++skipped;
          out << "skipped   " << rec.clip_id << "\n";
        } else {
          const auto wave = audio::read_wav(rec.audio_path);
          auto spec = features::log_mel_energy(wave);
          spec.clip_id = rec.clip_id;
          features::write_feature_cache(cache, spec);
          new_index[rec.clip_id] = {{"audio", rec.audio_path},
                                    {"audio_sha256", audio_digest},
                                    {"cache", cache.filename().string()},
                                    {"cache_sha256", io::file_sha256(cache)},
                                    {"frames", spec.frames()},
                                    {"bands", spec.bands()}};
          ++extracted;
          out << "extracted " << rec.clip_id << " (" << spec.frames() << " frames)\n";
        }
        run.inputs.push_back({rec.audio_path, audio_digest});
        run.add_output(cache);
      } catch (const std::exception& e) {
        err << "features: clip \"" << rec.clip_id << "\": " << e.what() << "\n";
        ++failed;
      }
    }
    write_json_file(index_path, {{"format", "sedkit-feature-index"}, {"clips", new_index}});
    run.add_output(index_path);
    run.config = {{"manifest", fs::absolute(opt.manifest).string()},
                  {"num_bands", features::kNumBands},
                  {"frame_seconds", features::kFrameSeconds},
                  {"hop_seconds", features::kHopSeconds}};
    watch.stamp(run);
    write_run_manifest(opt.out_dir / "run_manifest.json", run);
    out << extracted << " extracted, " << skipped << " skipped, " << failed << " failed\n";
    return failed == 0 ? 0 : 1;
  });
}

// ---------------------------------------------------------------------------
// train

namespace {

train::Dataset dataset_from(const fs::path& manifest_path, const fs::path& features_dir,
                            RunManifest* run) {
  data::Manifest manifest = data::load_manifest(manifest_path);
  data::load_annotations(manifest);
  train::Dataset ds = train::load_dataset(manifest, features_dir);
  if (run != nullptr) {
    run->add_input(manifest_path);
    for (const auto& c : manifest.clips) {
      run->add_input(c.annotation_path);
      run->add_input(train::feature_cache_path(features_dir, c.clip_id));
    }
  }
  return ds;
}

struct PathField {
  const char* key;
  bool required;
  std::optional<fs::path> value;
};

// Reads string-valued path keys, reporting type problems and missing keys.
void read_paths(const json& j, const fs::path& base, std::vector<PathField>& fields,
                std::vector<std::string>& errors) {
  for (auto& f : fields) {
    if (!j.contains(f.key)) {
      if (f.required) errors.push_back(std::string(f.key) + " is required");
      continue;
    }
    if (!j.at(f.key).is_string()) {
      errors.push_back(std::string(f.key) + " must be a path string");
      continue;
    }
    f.value = resolve(base, j.at(f.key).get<std::string>());
  }
}

}  // namespace

int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded("train", err, [&]() -> int {
    Stopwatch watch;
    RunManifest run;
    run.command = "train";
    const json doc = read_json_file(opt.config);
    run.add_input(opt.config);
    const fs::path base = fs::absolute(opt.config).parent_path();

    std::vector<std::string> errors;
    if (!doc.is_object()) throw ConfigError("train config must be a JSON object");
    std::vector<PathField> paths{{"manifest", true, {}},
                                 {"features", true, {}},
                                 {"output", !opt.output.has_value(), {}},
                                 {"soft_labels", false, {}}};
    read_paths(doc, base, paths, errors);
    for (const auto& [key, _] : doc.items()) {
      if (key != "manifest" && key != "features" && key != "output" &&
          key != "soft_labels" && key != "training") {
        errors.push_back("unknown key \"" + key + "\"");
      }
    }
    train::TrainConfig config;
    if (!doc.contains("training")) {
      errors.push_back("training is required");
    } else {
      try {
        config = train::TrainConfig::from_json(doc.at("training"));
      } catch (const ConfigError& e) {
        for (const auto& i : e.issues()) errors.push_back("training." + i);
      }
    }
    if (opt.seed) config.seed = *opt.seed;
    if (opt.fold) config.fold = *opt.fold;
    if (config.mode == train::Mode::kMtlSoft && !paths[3].value) {
      errors.push_back("soft_labels is required for mode mtl_soft");
    }
    if (!errors.empty()) throw ConfigError(std::move(errors));

    const fs::path output = opt.output ? fs::absolute(*opt.output) : *paths[2].value;
    const train::Dataset ds = dataset_from(*paths[0].value, *paths[1].value, &run);
    const train::Split split = train::make_split(ds, config.fold);

    train::TrainResult result;
    if (config.mode == train::Mode::kTeacher) {
      result = train::train_teacher(ds, split, config);
    } else {
      train::SoftLabels soft;
      if (config.mode == train::Mode::kMtlSoft) {
        soft = train::read_soft_labels(*paths[3].value);
        run.add_input(*paths[3].value);
      }
      result = train::train_student(ds, split, config, &soft);
    }

    fs::create_directories(output);
    const fs::path ckpt = output / "model.ckpt";
    const fs::path log = output / "train_log.jsonl";
    nn::save_checkpoint(ckpt, result.model);
    io::write_file(log, result.log_jsonl());
    run.config = doc;
    run.config["training"] = config.to_json();
    run.add_output(ckpt);
    run.add_output(log);
    watch.stamp(run);
    write_run_manifest(output / "run_manifest.json", run);

    const auto& last = result.log.back();
    out << to_string(config.mode) << ": " << result.log.size() << " epochs, best epoch "
        << result.best_epoch << "; last " << last.val_metrics.dump() << "\n";
    return 0;
  });
}

// ---------------------------------------------------------------------------
// distill

int cmd_distill(const DistillOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded("distill", err, [&]() -> int {
    Stopwatch watch;
    RunManifest run;
    run.command = "distill";
    const nn::Model teacher = nn::load_checkpoint(opt.teacher);
    if (teacher.kind != nn::NetKind::kTeacher) {
      throw ArgumentError(opt.teacher.string() + " is not a teacher checkpoint");
    }
    run.add_input(opt.teacher);
    const train::Dataset ds = dataset_from(opt.manifest, opt.features, &run);
    const train::SoftLabels labels =
        train::compute_soft_labels(teacher, ds, opt.temperature);
    train::write_soft_labels(opt.out, labels);
    run.config = {{"teacher", fs::absolute(opt.teacher).string()},
                  {"temperature", opt.temperature}};
    run.add_output(opt.out);
    watch.stamp(run);
    fs::path run_path = opt.out;
    run_path += ".run.json";
    write_run_manifest(run_path, run);
    out << labels.size() << " soft labels at T=" << opt.temperature << " -> "
        << opt.out.string() << "\n";
    return 0;
  });
}

// ---------------------------------------------------------------------------
// eval

namespace {

eval::EvalConfig load_eval_config(const std::optional<fs::path>& path) {
  if (!path) return {};
  std::vector<std::string> errors;
  auto config = eval::EvalConfig::from_json(read_json_file(*path), errors);
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return config;
}

int evaluate_and_write(const EvalOptions& opt, const train::Dataset& ds,
                       const train::PosteriorFn& predict, RunManifest& run,
                       const Stopwatch& watch, std::ostream& out) {
  const eval::EvalConfig config = load_eval_config(opt.eval_config);
  if (opt.eval_config) run.add_input(*opt.eval_config);
  const train::Split split = train::make_split(ds, opt.fold);
  const auto& scored = opt.fold == -1 ? split.train : split.test;
  const eval::Report report = train::evaluate_clips(ds, scored, split.val, predict, config);

  fs::create_directories(opt.out_dir);
  const fs::path json_path = opt.out_dir / "report.json";
  const fs::path text_path = opt.out_dir / "report.txt";
  json doc = report.to_json();
  doc["fold"] = opt.fold;
  doc["clips"] = scored.size();
  write_json_file(json_path, doc);
  io::write_file(text_path, report.table());
  run.config = {{"fold", opt.fold}, {"evaluation", config.to_json()}};
  run.add_output(json_path);
  run.add_output(text_path);
  watch.stamp(run);
  write_run_manifest(opt.out_dir / "run_manifest.json", run);
  out << report.table();
  return 0;
}

}  // namespace

int run_eval(const EvalOptions& opt, const train::PosteriorFn& predict, std::ostream& out,
             std::ostream& err) {
  return guarded("eval", err, [&]() -> int {
    Stopwatch watch;
    RunManifest run;
    run.command = "eval";
    const train::Dataset ds = dataset_from(opt.manifest, opt.features, &run);
    return evaluate_and_write(opt, ds, predict, run, watch, out);
  });
}

int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded("eval", err, [&]() -> int {
    Stopwatch watch;
    RunManifest run;
    run.command = "eval";
    const nn::Model model = nn::load_checkpoint(opt.checkpoint);
    if (model.kind != nn::NetKind::kStudent) {
      throw ArgumentError(opt.checkpoint.string() + " is not a student checkpoint");
    }
    run.add_input(opt.checkpoint);
    const train::Dataset ds = dataset_from(opt.manifest, opt.features, &run);
    std::size_t chunk_len = 0;
    if (model.extra.contains("config")) {
      chunk_len = model.extra["config"].value("chunk_len", std::size_t{0});
    }
    return evaluate_and_write(opt, ds, train::model_predictor(model, chunk_len), run,
                              watch, out);
  });
}

// ---------------------------------------------------------------------------
// cv

int cmd_cv(const CvOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded("cv", err, [&]() -> int {
    Stopwatch watch;
    RunManifest run;
    run.command = "cv";
    json doc = read_json_file(opt.config);
    run.add_input(opt.config);
    const fs::path base = fs::absolute(opt.config).parent_path();
    if (!doc.is_object()) throw ConfigError("cv config must be a JSON object");

    std::vector<std::string> errors;
    std::vector<PathField> paths{{"manifest", true, {}},
                                 {"features", true, {}},
                                 {"output", !opt.output.has_value(), {}}};
    read_paths(doc, base, paths, errors);
    json grid = doc;
    grid.erase("manifest");
    grid.erase("features");
    grid.erase("output");
    train::CvConfig config;
    try {
      config = train::CvConfig::from_json(grid);
    } catch (const ConfigError& e) {
      for (const auto& i : e.issues()) errors.push_back(i);
    }
    if (!errors.empty()) throw ConfigError(std::move(errors));

    const fs::path output = opt.output ? fs::absolute(*opt.output) : *paths[2].value;
    const train::Dataset ds = dataset_from(*paths[0].value, *paths[1].value, &run);
    const train::CvResult result = train::run_cross_validation(ds, config, opt.workers);

    fs::create_directories(output);
    const fs::path json_path = output / "cv_report.json";
    const fs::path table_path = output / "comparison.txt";
    const fs::path events_path = output / "per_event.txt";
    write_json_file(json_path, result.to_json());
    io::write_file(table_path, result.comparison_table());
    io::write_file(events_path, result.per_event_table());
    run.config = doc;
    run.add_output(json_path);
    run.add_output(table_path);
    run.add_output(events_path);
    watch.stamp(run);
    write_run_manifest(output / "run_manifest.json", run);
    out << result.comparison_table();
    return 0;
  });
}

// ---------------------------------------------------------------------------
// synth-fixture

train::TrainConfig fixture_teacher_config() {
  train::TrainConfig c;
  c.mode = train::Mode::kTeacher;
  c.learning_rate = 3e-3;
  c.batch_size = 2;
  c.max_epochs = 100;
  c.patience = 30;
  c.fold = -1;
  c.network.conv_channels = {8, 8, 8};
  return c;
}

train::TrainConfig fixture_student_config(train::Mode mode) {
  train::TrainConfig c;
  c.mode = mode;
  c.alpha = mode == train::Mode::kMtlHard ? 1.0 : 0.0;
  c.beta = 1.0;
  c.temperature = 1.0;
  c.learning_rate = 3e-3;
  c.batch_size = 2;
  c.max_epochs = 500;
  c.patience = 500;
  c.fold = -1;
  c.chunk_len = 150;
  c.network.conv_channels = {16, 16, 16};
  c.network.scene_channels = {8, 8};
  c.network.gru_units = 16;
  c.network.event_dense = 16;
  return c;
}

int cmd_synth_fixture(const SynthOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded("synth-fixture", err, [&]() -> int {
    fixture::FixtureSpec spec;
    spec.clips_per_scene = opt.clips_per_scene;
    spec.clip_seconds = opt.clip_seconds;
    spec.seed = opt.seed;
    const auto paths = fixture::write_fixture(opt.out_dir, spec);

    const json teacher{{"manifest", "work/manifest.json"},
                       {"features", "work/features"},
                       {"output", "work/teacher"},
                       {"training", fixture_teacher_config().to_json()}};
    json student{{"manifest", "work/manifest.json"},
                 {"features", "work/features"},
                 {"output", "work/student"},
                 {"soft_labels", "work/soft_labels.json"},
                 {"training", fixture_student_config(train::Mode::kMtlSoft).to_json()}};
    write_json_file(paths.root / "teacher.json", teacher);
    write_json_file(paths.root / "student.json", student);

    json runs = json::array();
    for (auto [name, mode] : {std::pair{"CNN-BiGRU", train::Mode::kEventOnly},
                              std::pair{"MTL", train::Mode::kMtlHard},
                              std::pair{"MTL w/ soft labels", train::Mode::kMtlSoft}}) {
      train::TrainConfig c = fixture_student_config(mode);
      c.max_epochs = 60;
      c.patience = 20;
      json r = c.to_json();
      r.erase("fold");
      r.erase("seed");
      r["name"] = name;
      runs.push_back(r);
    }
    train::TrainConfig t = fixture_teacher_config();
    t.max_epochs = 60;
    json tj = t.to_json();
    tj.erase("fold");
    tj.erase("seed");
    const json cv{{"manifest", "work/manifest.json"},
                  {"features", "work/features"},
                  {"output", "work/cv"},
                  {"seeds", {0}},
                  {"teacher", tj},
                  {"runs", runs}};
    write_json_file(paths.root / "cv.json", cv);
    out << "fixture written to " << paths.root.string() << " ("
        << 4 * opt.clips_per_scene << " clips)\n";
    return 0;
  });
}

}  // namespace sedkit::cli
