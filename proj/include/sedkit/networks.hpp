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

#ifndef SEDKIT_NETWORKS_HPP_
#define SEDKIT_NETWORKS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sedkit/features.hpp"
#include "sedkit/tape.hpp"
#include "sedkit/tensor.hpp"

namespace sedkit::nn {

// Pooling window as (time, band).
struct Pool {
  int time = 1;
  int band = 1;
  bool operator==(const Pool&) const = default;
};

// Layer sizes for both networks. Defaults are the published configuration;
// smaller widths are useful for desk-scale experiments.
struct NetSpec {
  std::size_t num_bands = features::kNumBands;
  std::size_t num_scenes = 4;
  std::size_t num_events = 25;
  std::vector<std::size_t> conv_channels{128, 128, 128};
  std::vector<Pool> teacher_pools{{8, 8}, {4, 4}, {2, 2}};
  std::vector<Pool> trunk_pools{{1, 8}, {1, 4}, {1, 2}};
  std::vector<std::size_t> scene_channels{64, 16};
  std::vector<Pool> scene_pools{{10, 1}, {5, 1}};
  std::size_t gru_units = 32;
  std::size_t event_dense = 32;

  void validate() const;
  nlohmann::json to_json() const;
  static NetSpec from_json(const nlohmann::json& j);
  bool operator==(const NetSpec&) const = default;
};

enum class NetKind { kTeacher, kStudent };
std::string_view to_string(NetKind kind);
NetKind net_kind_from_string(std::string_view name);

// Named parameters in declaration order.
class ModelParams {
 public:
  void add(std::string name, Tensor value);

  std::size_t size() const { return entries_.size(); }
  const std::string& name(std::size_t i) const { return entries_[i].first; }
  Tensor& tensor(std::size_t i) { return entries_[i].second; }
  const Tensor& tensor(std::size_t i) const { return entries_[i].second; }
  std::size_t index_of(std::string_view name) const;
  Tensor& at(std::string_view name) { return tensor(index_of(name)); }
  const Tensor& at(std::string_view name) const { return tensor(index_of(name)); }

  std::size_t scalar_count() const;
  // Zero-valued copy with the same names and shapes.
  ModelParams zeros_like() const;
  // SHA-256 over names, shapes and raw values.
  std::string checksum() const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

// Glorot-uniform weights (limit sqrt(6 / (fan_in + fan_out))), zero biases,
// drawn in declaration order from one seeded stream.
ModelParams init_params(NetKind kind, const NetSpec& spec, std::uint64_t seed);

// Fan-based bound for a parameter, 0 for biases.
double init_limit(NetKind kind, const NetSpec& spec, std::string_view name);

// Parameters placed on a tape, as leaves (trainable) or constants (frozen).
class ParamBinding {
 public:
  ParamBinding(ad::Tape& tape, const ModelParams& params, bool trainable);

  ad::Var operator[](std::string_view name) const;
  // Adds scale * dLoss/dparam into `grads` (same layout as the bound params).
  void accumulate_grads(const ad::Tape& tape, ModelParams& grads,
                        double scale = 1.0) const;

 private:
  const ModelParams* params_;
  std::vector<ad::Var> vars_;
};

// features [bands x frames] -> scene logits [C].
ad::Var teacher_forward(ad::Tape& tape, const ParamBinding& params,
                        const NetSpec& spec, const Tensor& features);

struct StudentOutputs {
  ad::Var event_logits;  // [M x N]
  ad::Var scene_logits;  // [C]
};

StudentOutputs student_forward(ad::Tape& tape, const ParamBinding& params,
                               const NetSpec& spec, const Tensor& features);

// A network with its parameters and the feature statistics it was trained
// with. Checkpoints are written as
//   "SDCK1\n" | u64 header length | JSON header | f64 parameter blob
// with all integers and floats little-endian and the blob in declared order.
struct Model {
  NetKind kind = NetKind::kStudent;
  NetSpec spec;
  ModelParams params;
  std::uint64_t seed = 0;
  std::optional<features::BandStats> feature_stats;
  nlohmann::json extra = nlohmann::json::object();

  static Model create(NetKind kind, const NetSpec& spec, std::uint64_t seed);

  // Standardizes with feature_stats when present.
  Tensor prepare(const features::LogMelSpectrogram& features) const;
};

std::string encode_checkpoint(const Model& model);
Model decode_checkpoint(std::string_view bytes);
void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);

// Inference helpers on already-prepared features.
std::vector<double> teacher_logits(const Model& teacher, const Tensor& features);
struct StudentPrediction {
  Tensor event_logits;                // [M x N]
  Tensor event_posteriors;            // [M x N], sigmoid of logits
  std::vector<double> scene_logits;   // [C]
};
// chunk_len > 0 runs fixed-length zero-padded windows, as in training, and
// stitches the valid frames back together; scene logits are averaged over
// windows.
StudentPrediction student_predict(const Model& student, const Tensor& features,
                                  std::size_t chunk_len = 0);

}  // namespace sedkit::nn

#endif  // SEDKIT_NETWORKS_HPP_
