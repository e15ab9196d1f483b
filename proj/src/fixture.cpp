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

#include "sedkit/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "sedkit/audio.hpp"
#include "sedkit/error.hpp"
#include "sedkit/io.hpp"

namespace sedkit::fixture {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kScenes{"home", "office", "park", "street"};
const std::vector<std::string> kEvents{"kettle", "printer", "birds", "horn",
                                       "speech"};
const double kToneHz[] = {440.0, 880.0, 1760.0, 3520.0, 6000.0};

constexpr double kNoiseLevel = 0.05;
constexpr double kToneLevel = 0.25;
constexpr double kFadeSeconds = 0.01;

std::vector<double> background(std::size_t scene, std::size_t samples,
                               int sample_rate, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> out(samples);
  double state = 0.0, prev = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double w = gauss(rng);
    double v = 0.0;
    switch (scene % 4) {
      case 0:  // low-passed
        state = 0.95 * state + 0.05 * w;
        v = 4.0 * state;
        break;
      case 1:  // high-passed
        v = 0.7 * (w - prev);
        break;
      case 2:  // white
        v = 0.5 * w;
        break;
      default:  // white plus mains hum
        v = 0.3 * w + 1.5 * std::sin(2.0 * std::numbers::pi * 120.0 *
                                     static_cast<double>(i) / sample_rate);
        break;
    }
    prev = w;
    out[i] = kNoiseLevel * v;
  }
  return out;
}

void add_tone(std::vector<double>& wave, int sample_rate, double hz,
              const data::EventAnnotation& ev) {
  const auto first = static_cast<std::size_t>(std::ceil(ev.onset * sample_rate));
  const auto last = std::min(
      wave.size(), static_cast<std::size_t>(std::ceil(ev.offset * sample_rate)));
  const double fade = kFadeSeconds * sample_rate;
  for (std::size_t i = first; i < last; ++i) {
    const double pos = static_cast<double>(i - first);
    const double rest = static_cast<double>(last - i);
    const double gain = std::min({1.0, pos / fade, rest / fade});
    wave[i] += kToneLevel * gain *
               std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) /
                        sample_rate);
  }
}

std::string clip_name(std::size_t scene, std::size_t index) {
  return kScenes[scene] + "_" + std::to_string(index);
}

std::string format_seconds(double s) {
  std::ostringstream out;
  out.precision(6);
  out << s;
  return out.str();
}

}  // namespace

data::Vocabulary fixture_vocabulary() { return {kScenes, kEvents}; }

std::vector<data::EventAnnotation> fixture_events(std::size_t scene,
                                                  std::size_t index,
                                                  const FixtureSpec& spec) {
  const double shift = 0.1 * static_cast<double>((index / 2) % 3);
  const bool odd = index % 2 == 1;
  auto clamp = [&](double t) { return std::min(t, spec.clip_seconds); };
  std::vector<data::EventAnnotation> events;
  const double own = 0.2 + (odd ? 0.9 : 0.0) + shift;
  events.push_back({own, clamp(own + 1.2), scene});
  const double shared = (odd ? 0.3 : 1.6) + shift;
  events.push_back({shared, clamp(shared + 1.0), kEvents.size() - 1});
  std::sort(events.begin(), events.end(),
            [](const auto& a, const auto& b) { return a.onset < b.onset; });
  return events;
}

FixturePaths write_fixture(const fs::path& root, const FixtureSpec& spec) {
  if (spec.sample_rate < 8000 || spec.clip_seconds < 2.6 || spec.clips_per_scene == 0) {
    throw ArgumentError("fixture needs >= 8 kHz, >= 2.6 s clips and >= 1 clip per scene");
  }
  FixturePaths paths{root, root / "audio", root / "annotations",
                     root / "metadata.tsv", root / "vocabulary.json"};
  fs::create_directories(paths.audio_dir);
  fs::create_directories(paths.annotations_dir);

  const auto samples =
      static_cast<std::size_t>(std::llround(spec.clip_seconds * spec.sample_rate));
  std::string metadata;
  for (std::size_t scene = 0; scene < kScenes.size(); ++scene) {
    for (std::size_t i = 0; i < spec.clips_per_scene; ++i) {
      std::mt19937_64 rng(spec.seed * 7919 + scene * 1000 + i);
      audio::Waveform wave{background(scene, samples, spec.sample_rate, rng),
                           spec.sample_rate};
      std::string ann;
      for (const auto& ev : fixture_events(scene, i, spec)) {
        add_tone(wave.samples, spec.sample_rate, kToneHz[ev.event], ev);
        ann += format_seconds(ev.onset) + "\t" + format_seconds(ev.offset) + "\t" +
               kEvents[ev.event] + "\n";
      }
      const std::string name = clip_name(scene, i);
      audio::write_wav(paths.audio_dir / (name + ".wav"), wave);
      io::write_file(paths.annotations_dir / (name + ".ann"), ann);
      metadata += "audio/" + name + ".wav\t" + kScenes[scene] + "\n";
    }
  }
  io::write_file(paths.metadata, metadata);
  io::write_file(paths.vocabulary, fixture_vocabulary().to_json().dump(2) + "\n");
  return paths;
}

}  // namespace sedkit::fixture
