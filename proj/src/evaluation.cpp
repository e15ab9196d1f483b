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

#include "sedkit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "sedkit/error.hpp"

namespace sedkit::eval {

using nlohmann::json;

ThresholdPolicy ThresholdPolicy::fixed_at(double value) {
  ThresholdPolicy p;
  p.fixed = value;
  return p;
}

ThresholdPolicy ThresholdPolicy::calibrated(std::vector<double> thresholds) {
  ThresholdPolicy p;
  p.kind = Kind::kCalibrated;
  p.per_class = std::move(thresholds);
  return p;
}

double ThresholdPolicy::threshold(std::size_t event) const {
  if (kind == Kind::kFixed) return fixed;
  if (event >= per_class.size()) {
    throw DimensionError("no calibrated threshold for class " + std::to_string(event));
  }
  return per_class[event];
}

void ThresholdPolicy::validate(std::size_t num_classes) const {
  auto check = [](double t) {
    if (!(t > 0.0 && t < 1.0)) {
      throw ArgumentError("threshold " + std::to_string(t) + " is outside (0, 1)");
    }
  };
  if (kind == Kind::kFixed) {
    check(fixed);
    return;
  }
  if (per_class.size() != num_classes) {
    throw DimensionError("expected " + std::to_string(num_classes) +
                         " calibrated thresholds, got " +
                         std::to_string(per_class.size()));
  }
  for (double t : per_class) check(t);
}

json ThresholdPolicy::to_json() const {
  if (kind == Kind::kFixed) return {{"kind", "fixed"}, {"value", fixed}};
  return {{"kind", "calibrated"}, {"values", per_class}};
}

ThresholdPolicy ThresholdPolicy::from_json(const json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "fixed") return fixed_at(j.at("value").get<double>());
    if (kind == "calibrated") {
      return calibrated(j.at("values").get<std::vector<double>>());
    }
    throw ParseError("unknown threshold kind \"" + kind + "\"");
  } catch (const json::exception& e) {
    throw ParseError(std::string("threshold policy: ") + e.what());
  }
}

std::vector<double> EvalConfig::effective_grid() const {
  if (!grid.empty()) return grid;
  std::vector<double> g;
  for (int i = 1; i <= 19; ++i) g.push_back(0.05 * i);
  return g;
}

void EvalConfig::collect_errors(std::vector<std::string>& errors) const {
  if (!(fixed_threshold > 0.0 && fixed_threshold < 1.0)) {
    errors.push_back("evaluation.fixed_threshold must be in (0, 1)");
  }
  for (double t : grid) {
    if (!(t > 0.0 && t < 1.0)) {
      errors.push_back("evaluation.grid values must be in (0, 1)");
      break;
    }
  }
  if (median_window == 0) errors.push_back("evaluation.median_window must be >= 1");
  if (!(segment_seconds > 0.0)) {
    errors.push_back("evaluation.segment_seconds must be positive");
  }
}

json EvalConfig::to_json() const {
  return {{"threshold", policy == ThresholdPolicy::Kind::kFixed ? "fixed" : "calibrated"},
          {"fixed_threshold", fixed_threshold},
          {"grid", grid},
          {"median_window", median_window},
          {"segment_seconds", segment_seconds}};
}

EvalConfig EvalConfig::from_json(const json& j, std::vector<std::string>& errors) {
  EvalConfig c;
  if (!j.is_object()) {
    errors.push_back("evaluation must be an object");
    return c;
  }
  static const std::vector<std::string> known{
      "threshold", "fixed_threshold", "grid", "median_window", "segment_seconds"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      errors.push_back("evaluation: unknown key \"" + key + "\"");
    }
  }
  auto read = [&](const char* key, auto& out) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(out);
    } catch (const json::exception&) {
      errors.push_back(std::string("evaluation.") + key + " has the wrong type");
    }
  };
  std::string kind = "fixed";
  read("threshold", kind);
  if (kind == "fixed") {
    c.policy = ThresholdPolicy::Kind::kFixed;
  } else if (kind == "calibrated") {
    c.policy = ThresholdPolicy::Kind::kCalibrated;
  } else {
    errors.push_back("evaluation.threshold must be \"fixed\" or \"calibrated\"");
  }
  read("fixed_threshold", c.fixed_threshold);
  read("grid", c.grid);
  read("median_window", c.median_window);
  read("segment_seconds", c.segment_seconds);
  c.collect_errors(errors);
  return c;
}

namespace {

void check_posteriors(const Tensor& posteriors) {
  if (posteriors.rank() != 2) {
    throw DimensionError("posteriors must be [classes x frames], got " +
                         shape_to_string(posteriors.shape()));
  }
  for (double v : posteriors.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ArgumentError("posterior " + std::to_string(v) + " is outside [0, 1]");
    }
  }
}

void smooth_row(const std::uint8_t* in, std::uint8_t* out, std::size_t n,
                std::size_t window) {
  const std::size_t half = window / 2;
  // Prefix sums make every window O(1).
  std::vector<std::size_t> prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + in[i];
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + (window - half));
    const std::size_t ones = prefix[hi] - prefix[lo];
    out[i] = 2 * ones > hi - lo ? 1 : 0;
  }
}

std::size_t segment_of(std::size_t frame, double hop, double segment_seconds) {
  return static_cast<std::size_t>(
      std::floor((static_cast<double>(frame) + 0.5) * hop / segment_seconds));
}

void check_pair(const data::EventRoll& ref, const data::EventRoll& pred,
                double segment_seconds) {
  if (ref.classes() != pred.classes() || ref.frames() != pred.frames()) {
    throw DimensionError("reference is " + std::to_string(ref.classes()) + "x" +
                         std::to_string(ref.frames()) + " but prediction is " +
                         std::to_string(pred.classes()) + "x" +
                         std::to_string(pred.frames()));
  }
  if (!(segment_seconds > 0.0)) throw ArgumentError("segment length must be positive");
}

// Class activity per segment: active[s * classes + m].
std::vector<std::uint8_t> segment_activity(const data::EventRoll& roll,
                                           std::size_t segments,
                                           double segment_seconds) {
  std::vector<std::uint8_t> active(segments * roll.classes(), 0);
  for (std::size_t n = 0; n < roll.frames(); ++n) {
    const std::size_t s = segment_of(n, roll.hop_seconds(), segment_seconds);
    for (std::size_t m = 0; m < roll.classes(); ++m) {
      if (roll.at(m, n)) active[s * roll.classes() + m] = 1;
    }
  }
  return active;
}

SegmentCounts count_classes(const data::EventRoll& ref, const data::EventRoll& pred,
                            std::size_t first, std::size_t last,
                            double segment_seconds) {
  check_pair(ref, pred, segment_seconds);
  SegmentCounts c;
  if (ref.frames() == 0) return c;
  const std::size_t segments =
      segment_of(ref.frames() - 1, ref.hop_seconds(), segment_seconds) + 1;
  const auto r = segment_activity(ref, segments, segment_seconds);
  const auto p = segment_activity(pred, segments, segment_seconds);
  const std::size_t m_total = ref.classes();
  c.segments = segments;
  for (std::size_t s = 0; s < segments; ++s) {
    std::size_t fn = 0, fp = 0;
    for (std::size_t m = first; m < last; ++m) {
      const bool a = r[s * m_total + m] != 0, b = p[s * m_total + m] != 0;
      c.nref += a;
      if (a && b) ++c.tp;
      if (!a && b) ++fp;
      if (a && !b) ++fn;
    }
    const std::size_t sub = std::min(fn, fp);
    c.fp += fp;
    c.fn += fn;
    c.substitutions += sub;
    c.deletions += fn - sub;
    c.insertions += fp - sub;
  }
  return c;
}

}  // namespace

data::EventRoll threshold_posteriors(const Tensor& posteriors,
                                     const ThresholdPolicy& policy,
                                     double hop_seconds) {
  check_posteriors(posteriors);
  const std::size_t m = posteriors.dim(0), n = posteriors.dim(1);
  policy.validate(policy.kind == ThresholdPolicy::Kind::kFixed ? 0 : m);
  data::EventRoll roll(m, n, hop_seconds);
  for (std::size_t i = 0; i < m; ++i) {
    const double t = policy.threshold(i);
    for (std::size_t j = 0; j < n; ++j) roll.set(i, j, posteriors.at(i, j) > t);
  }
  return roll;
}

data::EventRoll median_smooth(const data::EventRoll& roll, std::size_t window) {
  if (window == 0) throw ArgumentError("median window must be >= 1");
  data::EventRoll out(roll.classes(), roll.frames(), roll.hop_seconds());
  std::vector<std::uint8_t> row(roll.frames());
  for (std::size_t m = 0; m < roll.classes(); ++m) {
    smooth_row(roll.data().data() + m * roll.frames(), row.data(), roll.frames(),
               window);
    for (std::size_t n = 0; n < roll.frames(); ++n) out.set(m, n, row[n] != 0);
  }
  return out;
}

data::EventRoll binarize(const Tensor& posteriors, const ThresholdPolicy& policy,
                         double hop_seconds, std::size_t window) {
  return median_smooth(threshold_posteriors(posteriors, policy, hop_seconds), window);
}

SegmentCounts& SegmentCounts::operator+=(const SegmentCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  substitutions += o.substitutions;
  deletions += o.deletions;
  insertions += o.insertions;
  nref += o.nref;
  segments += o.segments;
  return *this;
}

json SegmentCounts::to_json() const {
  return {{"tp", tp},          {"fp", fp},
          {"fn", fn},          {"substitutions", substitutions},
          {"deletions", deletions}, {"insertions", insertions},
          {"nref", nref},      {"segments", segments}};
}

SegmentCounts segment_counts(const data::EventRoll& reference,
                             const data::EventRoll& prediction,
                             double segment_seconds) {
  return count_classes(reference, prediction, 0, reference.classes(), segment_seconds);
}

SegmentCounts class_segment_counts(const data::EventRoll& reference,
                                   const data::EventRoll& prediction,
                                   std::size_t event, double segment_seconds) {
  if (event >= reference.classes()) {
    throw DimensionError("class " + std::to_string(event) + " out of range");
  }
  return count_classes(reference, prediction, event, event + 1, segment_seconds);
}

Score f1_score(const SegmentCounts& c) {
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return {0.0, true};
  return {100.0 * static_cast<double>(2 * c.tp) / static_cast<double>(denom), false};
}

Score error_rate(const SegmentCounts& c) {
  if (c.nref == 0) return {static_cast<double>(c.insertions), true};
  return {static_cast<double>(c.substitutions + c.deletions + c.insertions) /
              static_cast<double>(c.nref),
          false};
}

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

}  // namespace

json Report::to_json() const {
  json rows = json::array();
  for (const auto& r : per_event) {
    rows.push_back({{"event", r.event},
                    {"f1", r.f1.value},
                    {"f1_undefined", r.f1.undefined},
                    {"er", r.er.value},
                    {"er_undefined", r.er.undefined},
                    {"counts", r.counts.to_json()}});
  }
  return {{"overall",
           {{"f1", f1.value},
            {"er", er.value},
            {"flags", {{"f1_undefined", f1.undefined}, {"er_undefined", er.undefined}}},
            {"counts", overall.to_json()}}},
          {"per_event", rows},
          {"per_event_er_normalization", "class-restricted"},
          {"thresholds", policy.to_json()}};
}

std::string Report::table() const {
  std::size_t width = 7;
  for (const auto& r : per_event) width = std::max(width, r.event.size());
  auto pad = [&](std::string s) {
    s.resize(width, ' ');
    return s;
  };
  auto cell = [](const Score& s, const char* pattern) {
    std::string v = fmt(pattern, s.value);
    return s.undefined ? v + "*" : v + " ";
  };
  std::ostringstream out;
  out << pad("Event") << "   F-score      ER\n";
  out << std::string(width + 19, '-') << "\n";
  for (const auto& r : per_event) {
    out << pad(r.event) << "  " << cell(r.f1, "%7.2f%%") << " "
        << cell(r.er, "%6.3f") << "\n";
  }
  out << std::string(width + 19, '-') << "\n";
  out << pad("Overall") << "  " << cell(f1, "%7.2f%%") << " " << cell(er, "%6.3f")
      << "\n";
  out << "(* undefined; per-event ER uses class-restricted Nref)\n";
  return out.str();
}

Report make_report(const std::vector<ClipPair>& clips,
                   const std::vector<std::string>& event_names,
                   const ThresholdPolicy& policy, double segment_seconds) {
  Report report;
  report.policy = policy;
  report.per_event.resize(event_names.size());
  for (std::size_t m = 0; m < event_names.size(); ++m) {
    report.per_event[m].event = event_names[m];
  }
  for (const auto& clip : clips) {
    if (clip.reference->classes() != event_names.size()) {
      throw DimensionError("reference has " + std::to_string(clip.reference->classes()) +
                           " classes but the vocabulary has " +
                           std::to_string(event_names.size()));
    }
    report.overall += segment_counts(*clip.reference, *clip.prediction, segment_seconds);
    for (std::size_t m = 0; m < event_names.size(); ++m) {
      report.per_event[m].counts +=
          class_segment_counts(*clip.reference, *clip.prediction, m, segment_seconds);
    }
  }
  report.f1 = f1_score(report.overall);
  report.er = error_rate(report.overall);
  for (auto& row : report.per_event) {
    row.f1 = f1_score(row.counts);
    row.er = error_rate(row.counts);
  }
  return report;
}

std::vector<double> calibrate_thresholds(
    const std::vector<Tensor>& posteriors,
    const std::vector<const data::EventRoll*>& references,
    const std::vector<double>& grid, std::size_t window, double segment_seconds) {
  if (grid.empty()) throw ArgumentError("threshold grid is empty");
  if (posteriors.size() != references.size()) {
    throw DimensionError("calibration needs one reference per posterior matrix");
  }
  if (posteriors.empty()) throw ArgumentError("calibration needs at least one clip");
  for (double t : grid) {
    if (!(t > 0.0 && t < 1.0)) throw ArgumentError("grid values must be in (0, 1)");
  }
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& p : posteriors) check_posteriors(p);
  const std::size_t m_total = posteriors.front().dim(0);

  std::vector<double> best(m_total, sorted.front());
  for (std::size_t m = 0; m < m_total; ++m) {
    double best_f1 = -1.0;
    for (double t : sorted) {
      SegmentCounts total;
      for (std::size_t c = 0; c < posteriors.size(); ++c) {
        const Tensor& post = posteriors[c];
        const data::EventRoll& ref = *references[c];
        if (post.dim(0) != m_total || ref.classes() != m_total ||
            ref.frames() != post.dim(1)) {
          throw DimensionError("posteriors and references disagree in shape");
        }
        const std::size_t n = post.dim(1);
        std::vector<std::uint8_t> raw(n), smooth(n);
        for (std::size_t j = 0; j < n; ++j) raw[j] = post.at(m, j) > t ? 1 : 0;
        smooth_row(raw.data(), smooth.data(), n, window);
        data::EventRoll pred(m_total, n, ref.hop_seconds());
        for (std::size_t j = 0; j < n; ++j) pred.set(m, j, smooth[j] != 0);
        total += class_segment_counts(ref, pred, m, segment_seconds);
      }
      const double f1 = f1_score(total).value;
      if (f1 > best_f1) {
        best_f1 = f1;
        best[m] = t;
      }
    }
  }
  return best;
}

}  // namespace sedkit::eval
