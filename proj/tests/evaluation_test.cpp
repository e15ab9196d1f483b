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

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "sedkit/error.hpp"
#include "sedkit/evaluation.hpp"

using namespace sedkit;
using namespace sedkit::eval;
using data::EventRoll;

namespace {

constexpr double kHop = 0.02;

EventRoll random_roll(std::mt19937_64& rng, std::size_t m, std::size_t n,
                      double density) {
  std::bernoulli_distribution on(density);
  EventRoll r(m, n, kHop);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) r.set(i, j, on(rng));
  }
  return r;
}

// Direct recount: per segment, mark classes by scanning frames whose centers
// fall in [s * len, (s + 1) * len).
SegmentCounts naive_counts(const EventRoll& ref, const EventRoll& pred, double len) {
  SegmentCounts c;
  const double end = static_cast<double>(ref.frames()) * kHop;
  for (std::size_t s = 0; static_cast<double>(s) * len < end; ++s) {
    bool any_frame = false;
    std::size_t fn = 0, fp = 0;
    for (std::size_t m = 0; m < ref.classes(); ++m) {
      bool r = false, p = false;
      for (std::size_t n = 0; n < ref.frames(); ++n) {
        const double center = (static_cast<double>(n) + 0.5) * kHop;
        if (center >= static_cast<double>(s) * len &&
            center < static_cast<double>(s + 1) * len) {
          any_frame = true;
          r = r || ref.at(m, n);
          p = p || pred.at(m, n);
        }
      }
      if (r) ++c.nref;
      if (r && p) ++c.tp;
      if (r && !p) ++fn;
      if (!r && p) ++fp;
    }
    if (!any_frame) continue;
    ++c.segments;
    c.fn += fn;
    c.fp += fp;
    const std::size_t sub = std::min(fn, fp);
    c.substitutions += sub;
    c.deletions += fn - sub;
    c.insertions += fp - sub;
  }
  return c;
}

}  // namespace

TEST_CASE("binarize thresholds strictly then smooths") {
  Tensor high({2, 40}, 0.9);
  auto all = binarize(high, ThresholdPolicy::fixed_at(0.5), kHop);
  for (auto v : all.data()) CHECK(v == 1);

  Tensor tie({2, 40}, 0.5);
  auto none = binarize(tie, ThresholdPolicy::fixed_at(0.5), kHop);
  for (auto v : none.data()) CHECK(v == 0);

  Tensor spike({1, 60}, 0.1);
  spike.at(0, 30) = 0.95;
  auto raw = threshold_posteriors(spike, ThresholdPolicy::fixed_at(0.5), kHop);
  CHECK(raw.at(0, 30) == 1);
  auto smooth = median_smooth(raw);
  for (auto v : smooth.data()) CHECK(v == 0);

  // A gap of one frame inside a long event is filled.
  EventRoll gap(1, 80, kHop);
  for (std::size_t n = 10; n < 70; ++n) gap.set(0, n, n != 40);
  CHECK(median_smooth(gap).at(0, 40) == 1);

  Tensor bad({1, 3}, 0.5);
  bad[1] = 1.5;
  CHECK_THROWS_AS(binarize(bad, ThresholdPolicy::fixed_at(0.5), kHop), ArgumentError);
  CHECK_THROWS_AS(binarize(high, ThresholdPolicy::fixed_at(1.0), kHop), ArgumentError);
  CHECK_THROWS_AS(binarize(high, ThresholdPolicy::calibrated({0.5}), kHop),
                  DimensionError);
}

TEST_CASE("median filter matches a sorting oracle") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 90;
    const std::size_t window = 1 + 2 * (rng() % 15);
    EventRoll r = random_roll(rng, 2, n, 0.5);
    EventRoll s = median_smooth(r, window);
    for (std::size_t m = 0; m < 2; ++m) {
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<int> w;
        const long half = static_cast<long>(window / 2);
        for (long k = static_cast<long>(i) - half; k <= static_cast<long>(i) + half; ++k) {
          if (k >= 0 && k < static_cast<long>(n)) w.push_back(r.at(m, static_cast<std::size_t>(k)));
        }
        std::sort(w.begin(), w.end());
        // Strict majority: the upper median for even-sized clipped windows
        // must be matched by the lower one.
        const int med = w.size() % 2 ? w[w.size() / 2]
                                     : std::min(w[w.size() / 2 - 1], w[w.size() / 2]);
        CHECK(s.at(m, i) == med);
      }
    }
  }
}

TEST_CASE("binarize is monotone in the threshold") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor p({3, 50});
    for (double& v : p.values()) v = u(rng);
    const double lo = u(rng) * 0.9 + 0.05;
    const double hi = std::min(0.99, lo + u(rng) * 0.3);
    auto a = threshold_posteriors(p, ThresholdPolicy::fixed_at(lo), kHop);
    auto b = threshold_posteriors(p, ThresholdPolicy::fixed_at(hi), kHop);
    for (std::size_t i = 0; i < a.data().size(); ++i) CHECK(b.data()[i] <= a.data()[i]);
  }
}

TEST_CASE("hand-counted segment example") {
  // One class, three 1 s segments; reference in segments 1 and 2, prediction
  // in segments 2 and 3.
  EventRoll ref(1, 150, kHop), pred(1, 150, kHop);
  for (std::size_t n = 0; n < 100; ++n) ref.set(0, n, true);
  for (std::size_t n = 50; n < 150; ++n) pred.set(0, n, true);
  SegmentCounts c = segment_counts(ref, pred);
  CHECK(c.segments == 3);
  CHECK(c.tp == 1);
  CHECK(c.fp == 1);
  CHECK(c.fn == 1);
  CHECK(c.substitutions == 0);
  CHECK(c.deletions == 1);
  CHECK(c.insertions == 1);
  CHECK(c.nref == 2);
  CHECK(f1_score(c).value == 50.0);
  CHECK(error_rate(c).value == 1.0);

  SegmentCounts perfect = segment_counts(ref, ref);
  CHECK(perfect.fp == 0);
  CHECK(perfect.fn == 0);
  CHECK(f1_score(perfect).value == 100.0);
  CHECK(error_rate(perfect).value == 0.0);

  EventRoll empty(1, 150, kHop);
  SegmentCounts e = segment_counts(empty, empty);
  CHECK(f1_score(e).undefined);
  CHECK(f1_score(e).value == 0.0);
  CHECK(error_rate(e).undefined);

  CHECK_THROWS_AS(segment_counts(ref, EventRoll(1, 149, kHop)), DimensionError);
}

TEST_CASE("segment counts match brute-force recount") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng() % 5;
    const std::size_t n = 1 + rng() % 300;
    const double density = 0.02 + 0.3 * static_cast<double>(rng() % 100) / 100.0;
    EventRoll ref = random_roll(rng, m, n, density);
    EventRoll pred = random_roll(rng, m, n, density);
    SegmentCounts fast = segment_counts(ref, pred);
    SegmentCounts slow = naive_counts(ref, pred, 1.0);
    CHECK(fast == slow);
    CHECK(fast.substitutions + fast.deletions == fast.fn);
    CHECK(fast.substitutions + fast.insertions == fast.fp);
    const auto f = f1_score(fast), g = f1_score(slow);
    CHECK(f.value == g.value);
    CHECK(error_rate(fast).value == error_rate(slow).value);
  }
}

TEST_CASE("metrics are invariant to class permutation") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 4, n = 200;
    EventRoll ref = random_roll(rng, m, n, 0.05), pred = random_roll(rng, m, n, 0.05);
    std::vector<std::size_t> perm{0, 1, 2, 3};
    std::shuffle(perm.begin(), perm.end(), rng);
    EventRoll rp(m, n, kHop), pp(m, n, kHop);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        rp.set(perm[i], j, ref.at(i, j));
        pp.set(perm[i], j, pred.at(i, j));
      }
    }
    CHECK(f1_score(segment_counts(ref, pred)).value ==
          f1_score(segment_counts(rp, pp)).value);
    CHECK(error_rate(segment_counts(ref, pred)).value ==
          error_rate(segment_counts(rp, pp)).value);
  }
}

TEST_CASE("per-event report") {
  EventRoll ref(2, 150, kHop), pred(2, 150, kHop);
  for (std::size_t n = 0; n < 100; ++n) ref.set(0, n, true);
  for (std::size_t n = 50; n < 150; ++n) pred.set(0, n, true);
  Report r = make_report({{&ref, &pred}}, {"fan", "silence"},
                         ThresholdPolicy::fixed_at(0.5));
  REQUIRE(r.per_event.size() == 2);
  CHECK(r.per_event[0].f1.value == 50.0);
  CHECK(r.per_event[0].er.value == 1.0);
  CHECK(r.per_event[1].f1.undefined);
  CHECK(r.per_event[1].f1.value == 0.0);
  CHECK(r.per_event[1].er.value == 0.0);
  // With one populated class the overall numbers equal that class's.
  CHECK(r.f1.value == r.per_event[0].f1.value);
  CHECK(r.er.value == r.per_event[0].er.value);

  auto j = r.to_json();
  CHECK(j["overall"]["f1"] == 50.0);
  CHECK(j["per_event"].size() == 2);
  CHECK(r.table().find("silence") != std::string::npos);
}

TEST_CASE("threshold calibration") {
  std::mt19937_64 rng(5);
  Tensor p({2, 200});
  EventRoll ref(2, 200, kHop);
  // Class 0 active on [50, 150) with posterior 0.35 inside and 0.25 outside:
  // every threshold in [0.25, 0.35) separates perfectly; the grid's first
  // such value is 0.3. Class 1 is never active and always 0.1.
  for (std::size_t n = 0; n < 200; ++n) {
    const bool on = n >= 50 && n < 150;
    ref.set(0, n, on);
    p.at(0, n) = on ? 0.35 : 0.25;
    p.at(1, n) = 0.1;
  }
  std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5};
  auto t = calibrate_thresholds({p}, {&ref}, grid);
  CHECK(t[0] == 0.3);
  CHECK(t[1] == 0.1);  // every value ties at F1 0, lowest wins
  CHECK(calibrate_thresholds({p}, {&ref}, grid) == t);
  CHECK(calibrate_thresholds({p}, {&ref}, {0.5}) == std::vector<double>{0.5, 0.5});
  CHECK_THROWS_AS(calibrate_thresholds({p}, {&ref}, {}), ArgumentError);
}

TEST_CASE("eval config validation lists every problem") {
  std::vector<std::string> errors;
  EvalConfig::from_json({{"threshold", "adaptive"},
                         {"fixed_threshold", 2.0},
                         {"median_window", 0},
                         {"bogus", 1}},
                        errors);
  CHECK(errors.size() == 4);
  errors.clear();
  auto c = EvalConfig::from_json({{"threshold", "calibrated"}}, errors);
  CHECK(errors.empty());
  CHECK(c.policy == ThresholdPolicy::Kind::kCalibrated);
  CHECK(c.effective_grid().size() == 19);
}
