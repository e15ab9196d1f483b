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

#ifndef SEDKIT_EVALUATION_HPP_
#define SEDKIT_EVALUATION_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "sedkit/dataset.hpp"
#include "sedkit/tensor.hpp"

namespace sedkit::eval {

inline constexpr std::size_t kMedianWindow = 27;
inline constexpr double kSegmentSeconds = 1.0;

struct ThresholdPolicy {
  enum class Kind { kFixed, kCalibrated };

  Kind kind = Kind::kFixed;
  double fixed = 0.5;
  std::vector<double> per_class;  // used when calibrated

  static ThresholdPolicy fixed_at(double value);
  static ThresholdPolicy calibrated(std::vector<double> thresholds);

  double threshold(std::size_t event) const;
  // Every threshold must lie in (0, 1).
  void validate(std::size_t num_classes) const;
  nlohmann::json to_json() const;
  static ThresholdPolicy from_json(const nlohmann::json& j);
};

// Evaluation knobs shared by eval, cv and validation during training.
struct EvalConfig {
  ThresholdPolicy::Kind policy = ThresholdPolicy::Kind::kFixed;
  double fixed_threshold = 0.5;
  std::vector<double> grid;  // empty: 0.05, 0.10, ..., 0.95
  std::size_t median_window = kMedianWindow;
  double segment_seconds = kSegmentSeconds;

  std::vector<double> effective_grid() const;
  // Appends one message per violation.
  void collect_errors(std::vector<std::string>& errors) const;
  nlohmann::json to_json() const;
  static EvalConfig from_json(const nlohmann::json& j,
                              std::vector<std::string>& errors);
};

// posteriors > threshold, no smoothing.
data::EventRoll threshold_posteriors(const Tensor& posteriors,
                                     const ThresholdPolicy& policy,
                                     double hop_seconds);

// Centered 1-D median per class. The window is clipped at the clip edges and
// a frame is active when more than half of the frames in its window are.
data::EventRoll median_smooth(const data::EventRoll& roll,
                              std::size_t window = kMedianWindow);

data::EventRoll binarize(const Tensor& posteriors, const ThresholdPolicy& policy,
                         double hop_seconds, std::size_t window = kMedianWindow);

struct SegmentCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t nref = 0;
  std::size_t segments = 0;

  SegmentCounts& operator+=(const SegmentCounts& other);
  bool operator==(const SegmentCounts&) const = default;
  nlohmann::json to_json() const;
};

// Segment of frame n: floor((n + 0.5) * hop / segment_s). A class is active in
// a segment if any of its frames is active.
SegmentCounts segment_counts(const data::EventRoll& reference,
                             const data::EventRoll& prediction,
                             double segment_seconds = kSegmentSeconds);

// Same, restricted to one class.
SegmentCounts class_segment_counts(const data::EventRoll& reference,
                                   const data::EventRoll& prediction,
                                   std::size_t event,
                                   double segment_seconds = kSegmentSeconds);

struct Score {
  double value = 0.0;
  bool undefined = false;
};

// Percent. Undefined (reported as 0) when 2TP + FP + FN == 0.
Score f1_score(const SegmentCounts& counts);
// Undefined (reported as the insertion count) when Nref == 0.
Score error_rate(const SegmentCounts& counts);

struct EventRow {
  std::string event;
  SegmentCounts counts;
  Score f1;
  Score er;
};

struct Report {
  SegmentCounts overall;
  Score f1;
  Score er;
  std::vector<EventRow> per_event;
  ThresholdPolicy policy;

  nlohmann::json to_json() const;
  // Aligned plain-text per-event table with an overall line.
  std::string table() const;
};

// One reference/prediction pair per clip; counts are summed over clips.
struct ClipPair {
  const data::EventRoll* reference;
  const data::EventRoll* prediction;
};

Report make_report(const std::vector<ClipPair>& clips,
                   const std::vector<std::string>& event_names,
                   const ThresholdPolicy& policy,
                   double segment_seconds = kSegmentSeconds);

// Per class, the grid value whose smoothed binarization maximizes the class F1
// summed over clips; ties go to the lower threshold.
std::vector<double> calibrate_thresholds(
    const std::vector<Tensor>& posteriors,
    const std::vector<const data::EventRoll*>& references,
    const std::vector<double>& grid, std::size_t window = kMedianWindow,
    double segment_seconds = kSegmentSeconds);

}  // namespace sedkit::eval

#endif  // SEDKIT_EVALUATION_HPP_
