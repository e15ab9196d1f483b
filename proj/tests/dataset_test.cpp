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

#include <cmath>
#include <random>
#include <set>
#include <string>

#include "doctest.h"
#include "sedkit/dataset.hpp"
#include "sedkit/error.hpp"

using namespace sedkit;
using namespace sedkit::data;

namespace {

Vocabulary tut_vocab() {
  Vocabulary v;
  v.scenes = {"home", "office", "city_center", "residential_area"};
  v.events = {"car", "dishes", "fan", "people walking"};
  return v;
}

}  // namespace

TEST_CASE("parse_metadata") {
  const Vocabulary v = tut_vocab();
  auto recs = parse_metadata("audio/a.wav\thome\n", v);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].clip_id == "a");
  CHECK(recs[0].audio_path == "audio/a.wav");
  CHECK(recs[0].scene == 0);

  CHECK(parse_metadata("", v).empty());
  CHECK(parse_metadata("\n# comment\n\r\n", v).size() == 0);
  CHECK(parse_metadata("b.wav\tresidential_area\r\nc.wav\toffice", v).size() == 2);

  try {
    parse_metadata("a.wav\tbeach\nb.wav\thome\nc.wav\tforest\n", v);
    FAIL("expected VocabularyError");
  } catch (const VocabularyError& e) {
    const std::string what = e.what();
    CHECK(what.find("beach") != std::string::npos);
    CHECK(what.find("forest") != std::string::npos);
  }
  try {
    parse_metadata("a.wav\thome\nno-tab-here\n", v);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_metadata("a.wav\thome\nx/a.wav\toffice\n", v),
                  ParseError);
}

TEST_CASE("parse_event_annotations") {
  const Vocabulary v = tut_vocab();
  auto evs = parse_event_annotations("0.5\t2.0\tcar\n", v, "clip");
  REQUIRE(evs.size() == 1);
  CHECK(evs[0] == EventAnnotation{0.5, 2.0, 0});

  auto poly = parse_event_annotations(
      "3.0\t4.0\tfan\n1.0\t3.5\tpeople walking\n1.5\t2.0\tcar\n", v, "clip");
  REQUIRE(poly.size() == 3);
  CHECK(poly[0].onset == 1.0);
  CHECK(poly[1].onset == 1.5);
  CHECK(poly[2].event == 2);

  try {
    parse_event_annotations("0.1\t0.2\tcar\n2.0\t1.0\tcar\n", v, "clip");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_event_annotations("1.0\t1.0\tcar", v, "c"), ParseError);
  CHECK_THROWS_AS(parse_event_annotations("x\t1.0\tcar", v, "c"), ParseError);
  CHECK_THROWS_AS(parse_event_annotations("0\t1.0\tcar\textra", v, "c"),
                  ParseError);
  try {
    parse_event_annotations("0\t1\tbanjo\n", v, "clip7");
    FAIL("expected VocabularyError");
  } catch (const VocabularyError& e) {
    CHECK(std::string(e.what()).find("banjo") != std::string::npos);
    CHECK(std::string(e.what()).find("clip7") != std::string::npos);
  }
}

TEST_CASE("events_to_roll frame-center rule") {
  auto empty = events_to_roll({}, 3, 10, 0.02);
  for (auto v : empty.data()) CHECK(v == 0);

  auto roll = events_to_roll({{0.0, 0.05, 0}}, 1, 5, 0.02);
  CHECK(roll.at(0, 0) == 1);
  CHECK(roll.at(0, 1) == 1);
  CHECK(roll.at(0, 2) == 0);

  auto poly = events_to_roll({{0.0, 0.1, 0}, {0.04, 0.2, 2}}, 3, 10, 0.02);
  CHECK(poly.at(0, 3) == 1);
  CHECK(poly.at(2, 3) == 1);
  CHECK(poly.at(1, 3) == 0);

  RollStats stats;
  auto clipped = events_to_roll({{0.15, 0.5, 0}, {0.9, 1.0, 0}}, 1, 10, 0.02,
                                &stats);
  CHECK(stats.clipped_events == 1);
  CHECK(stats.dropped_events == 1);
  CHECK(clipped.at(0, 9) == 1);
  CHECK(clipped.at(0, 6) == 0);
}

TEST_CASE("roll round trip within one hop") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> start(0.0, 8.0);
  std::uniform_real_distribution<double> length(0.1, 2.0);
  const double hop = 0.02;
  for (int trial = 0; trial < 100; ++trial) {
    // Non-overlapping events per class so runs map one-to-one.
    std::vector<EventAnnotation> events;
    for (std::size_t m = 0; m < 3; ++m) {
      double t = start(rng) * 0.2;
      for (int k = 0; k < 3; ++k) {
        const double on = t, off = on + length(rng);
        events.push_back({on, off, m});
        t = off + 0.1 + start(rng) * 0.1;
      }
    }
    const auto roll = events_to_roll(events, 3, 1000, hop);
    const auto back = roll_to_intervals(roll);
    REQUIRE(back.size() == events.size());
    for (const auto& ev : events) {
      bool matched = false;
      for (const auto& b : back) {
        if (b.event == ev.event && std::abs(b.onset - ev.onset) <= hop &&
            std::abs(b.offset - ev.offset) <= hop) {
          matched = true;
        }
      }
      CHECK(matched);
    }
  }
}

TEST_CASE("make_folds") {
  std::vector<ClipRecord> recs;
  for (int s = 0; s < 2; ++s) {
    for (int i = 0; i < 4; ++i) {
      ClipRecord r;
      r.clip_id = "s" + std::to_string(s) + "_" + std::to_string(i);
      r.scene = static_cast<std::size_t>(s);
      recs.push_back(r);
    }
  }
  auto split = make_folds(recs, 4, 42);
  for (int f = 0; f < 4; ++f) {
    auto ids = split.clips_in(f);
    REQUIRE(ids.size() == 2);
    std::set<char> scenes{ids[0][1], ids[1][1]};
    CHECK(scenes.size() == 2);
  }
  CHECK(make_folds(recs, 4, 42).fold_of == split.fold_of);
  CHECK_THROWS_AS(make_folds({recs[0], recs[1], recs[2]}, 4, 1), ArgumentError);

  // Uneven scene sizes: folds partition the clips and none is empty.
  std::vector<ClipRecord> uneven;
  for (int i = 0; i < 11; ++i) {
    ClipRecord r;
    r.clip_id = "c" + std::to_string(i);
    r.scene = static_cast<std::size_t>(i % 3 == 0 ? 0 : (i % 3 == 1 ? 1 : 2));
    uneven.push_back(r);
  }
  auto s2 = make_folds(uneven, 4, 7);
  CHECK(s2.fold_of.size() == uneven.size());
  std::size_t total = 0;
  for (int f = 0; f < 4; ++f) {
    const auto n = s2.clips_in(f).size();
    CHECK(n >= 2);
    total += n;
  }
  CHECK(total == uneven.size());
}

TEST_CASE("chunk_clip") {
  auto make = [](std::size_t n) {
    Tensor f({2, n});
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<double>(i + 1);
    EventRoll r(1, n, 0.02);
    for (std::size_t t = 0; t < n; t += 3) r.set(0, t, true);
    return std::pair{f, r};
  };
  {
    auto [f, r] = make(1000);
    auto chunks = chunk_clip(f, r, 500);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[1].valid == 500);
    CHECK(chunks[1].start == 500);
  }
  {
    auto [f, r] = make(600);
    auto chunks = chunk_clip(f, r, 500);
    REQUIRE(chunks.size() == 2);
    const auto& c = chunks[1];
    CHECK(c.valid == 100);
    std::size_t mask_sum = 0;
    for (auto m : c.mask) mask_sum += m;
    CHECK(mask_sum == 100);
    CHECK(c.features.at(0, 0) == f.at(0, 500));
    CHECK(c.features.at(1, 99) == f.at(1, 599));
    for (std::size_t t = 100; t < 500; ++t) {
      CHECK(c.features.at(0, t) == 0.0);
      CHECK(c.roll.at(0, t) == 0);
    }
  }
  {
    auto [f, r] = make(500);
    auto chunks = chunk_clip(f, r, 500);
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].valid == 500);
  }
  for (std::size_t n : {1u, 7u, 499u, 501u, 1234u}) {
    auto [f, r] = make(n);
    std::size_t valid = 0;
    for (const auto& c : chunk_clip(f, r, 100)) {
      for (auto m : c.mask) valid += m;
    }
    CHECK(valid == n);
  }
  auto [f, r] = make(10);
  CHECK_THROWS_AS(chunk_clip(f, EventRoll(1, 9, 0.02), 5), DimensionError);
}

TEST_CASE("manifest json round trip") {
  Manifest m;
  m.vocabulary = tut_vocab();
  m.num_folds = 2;
  m.fold_seed = 9;
  m.clips.push_back({"a", "/x/a.wav", "/x/a.ann", 1, {}, 0});
  m.clips.push_back({"b", "/x/b.wav", "/x/b.ann", 3, {}, 1});
  auto back = Manifest::from_json(m.to_json());
  CHECK(back.to_json() == m.to_json());
  CHECK(back.clip("b").scene == 3);
  CHECK_THROWS_AS(back.clip("zzz"), DataError);

  auto bad = m.to_json();
  bad["clips"]["a"]["fold"] = 5;
  CHECK_THROWS_AS(Manifest::from_json(bad), ParseError);
}
