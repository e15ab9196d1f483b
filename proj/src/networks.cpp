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

#include "sedkit/networks.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "binary_io.hpp"
#include "sedkit/error.hpp"
#include "sedkit/io.hpp"
#include "sedkit/ops.hpp"

namespace sedkit::nn {

using ad::Tape;
using ad::Var;
using nlohmann::json;

namespace {

nlohmann::json pools_to_json(const std::vector<Pool>& pools) {
  json j = json::array();
  for (const auto& p : pools) j.push_back({p.time, p.band});
  return j;
}

std::vector<Pool> pools_from_json(const json& j) {
  std::vector<Pool> pools;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) {
      throw ConfigError("pool must be a [time, band] pair");
    }
    pools.push_back({p[0].get<int>(), p[1].get<int>()});
  }
  return pools;
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

void NetSpec::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("network: " + msg); };
  if (num_bands == 0 || num_scenes == 0 || num_events == 0) {
    fail("bands, scenes and events must be positive");
  }
  if (conv_channels.empty()) fail("need at least one conv block");
  if (teacher_pools.size() != conv_channels.size() ||
      trunk_pools.size() != conv_channels.size()) {
    fail("one teacher and one trunk pool per conv block");
  }
  if (scene_pools.size() != scene_channels.size()) {
    fail("one scene pool per scene conv block");
  }
  for (std::size_t c : conv_channels) {
    if (c == 0) fail("conv channels must be positive");
  }
  for (std::size_t c : scene_channels) {
    if (c == 0) fail("scene channels must be positive");
  }
  for (const auto* pools : {&teacher_pools, &trunk_pools, &scene_pools}) {
    for (const Pool& p : *pools) {
      if (p.time < 1 || p.band < 1) fail("pool sizes must be >= 1");
    }
  }
  std::size_t bands = num_bands;
  for (const Pool& p : trunk_pools) {
    if (p.time != 1) fail("trunk pools must keep the time axis (time size 1)");
    bands = ceil_div(bands, static_cast<std::size_t>(p.band));
  }
  if (bands != 1) fail("trunk pools must reduce the band axis to 1");
  for (const Pool& p : scene_pools) {
    if (p.band != 1) fail("scene pools act on time only (band size 1)");
  }
  if (gru_units == 0 || event_dense == 0) fail("event head sizes must be positive");
}

json NetSpec::to_json() const {
  return json{{"num_bands", num_bands},
              {"num_scenes", num_scenes},
              {"num_events", num_events},
              {"conv_channels", conv_channels},
              {"teacher_pools", pools_to_json(teacher_pools)},
              {"trunk_pools", pools_to_json(trunk_pools)},
              {"scene_channels", scene_channels},
              {"scene_pools", pools_to_json(scene_pools)},
              {"gru_units", gru_units},
              {"event_dense", event_dense}};
}

NetSpec NetSpec::from_json(const json& j) {
  NetSpec s;
  try {
    if (j.contains("num_bands")) s.num_bands = j.at("num_bands").get<std::size_t>();
    if (j.contains("num_scenes")) s.num_scenes = j.at("num_scenes").get<std::size_t>();
    if (j.contains("num_events")) s.num_events = j.at("num_events").get<std::size_t>();
    if (j.contains("conv_channels")) {
      s.conv_channels = j.at("conv_channels").get<std::vector<std::size_t>>();
    }
    if (j.contains("teacher_pools")) s.teacher_pools = pools_from_json(j.at("teacher_pools"));
    if (j.contains("trunk_pools")) s.trunk_pools = pools_from_json(j.at("trunk_pools"));
    if (j.contains("scene_channels")) {
      s.scene_channels = j.at("scene_channels").get<std::vector<std::size_t>>();
    }
    if (j.contains("scene_pools")) s.scene_pools = pools_from_json(j.at("scene_pools"));
    if (j.contains("gru_units")) s.gru_units = j.at("gru_units").get<std::size_t>();
    if (j.contains("event_dense")) s.event_dense = j.at("event_dense").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("network: ") + e.what());
  }
  s.validate();
  return s;
}

std::string_view to_string(NetKind kind) {
  return kind == NetKind::kTeacher ? "teacher" : "student";
}

NetKind net_kind_from_string(std::string_view name) {
  if (name == "teacher") return NetKind::kTeacher;
  if (name == "student") return NetKind::kStudent;
  throw ParseError("unknown network kind \"" + std::string(name) + "\"");
}

void ModelParams::add(std::string name, Tensor value) {
  for (const auto& e : entries_) {
    if (e.first == name) throw ArgumentError("duplicate parameter " + name);
  }
  entries_.emplace_back(std::move(name), std::move(value));
}

std::size_t ModelParams::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].first == name) return i;
  }
  throw ArgumentError("no parameter named " + std::string(name));
}

std::size_t ModelParams::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams out;
  for (const auto& e : entries_) out.add(e.first, Tensor(e.second.shape()));
  return out;
}

std::string ModelParams::checksum() const {
  std::string bytes;
  for (const auto& [name, t] : entries_) {
    bytes += name;
    bytes.push_back('\0');
    for (std::size_t d : t.shape()) binary::put_le<std::uint64_t>(bytes, d);
    for (double v : t.values()) binary::put_le<double>(bytes, v);
  }
  return io::sha256_hex(bytes);
}

namespace {

struct ParamDecl {
  std::string name;
  Shape shape;
  double limit;  // 0 for biases
};

double glorot(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void declare_conv(std::vector<ParamDecl>& out, const std::string& prefix,
                  std::size_t cin, std::size_t cout) {
  out.push_back({prefix + ".weight", {cout, cin, 3, 3}, glorot(cin * 9, cout * 9)});
  out.push_back({prefix + ".bias", {cout}, 0.0});
}

void declare_dense(std::vector<ParamDecl>& out, const std::string& prefix,
                   std::size_t in, std::size_t outn) {
  out.push_back({prefix + ".weight", {in, outn}, glorot(in, outn)});
  out.push_back({prefix + ".bias", {outn}, 0.0});
}

std::vector<ParamDecl> declare(NetKind kind, const NetSpec& spec) {
  spec.validate();
  std::vector<ParamDecl> decls;
  const std::string conv_prefix = kind == NetKind::kTeacher ? "conv" : "trunk.conv";
  std::size_t cin = 1;
  for (std::size_t i = 0; i < spec.conv_channels.size(); ++i) {
    declare_conv(decls, conv_prefix + std::to_string(i), cin, spec.conv_channels[i]);
    cin = spec.conv_channels[i];
  }
  const std::size_t trunk_out = cin;
  if (kind == NetKind::kTeacher) {
    declare_dense(decls, "out", trunk_out, spec.num_scenes);
    return decls;
  }
  std::size_t sc = trunk_out;
  for (std::size_t i = 0; i < spec.scene_channels.size(); ++i) {
    declare_conv(decls, "scene.conv" + std::to_string(i), sc, spec.scene_channels[i]);
    sc = spec.scene_channels[i];
  }
  declare_dense(decls, "scene.out", sc, spec.num_scenes);
  const std::size_t u = spec.gru_units;
  for (const char* dir : {"fwd", "bwd"}) {
    const std::string p = std::string("event.gru.") + dir;
    decls.push_back({p + ".wx", {trunk_out, 3 * u}, glorot(trunk_out, u)});
    decls.push_back({p + ".wh", {u, 3 * u}, glorot(u, u)});
    decls.push_back({p + ".b", {3 * u}, 0.0});
  }
  declare_dense(decls, "event.fc", 2 * u, spec.event_dense);
  declare_dense(decls, "event.out", spec.event_dense, spec.num_events);
  return decls;
}

}  // namespace

ModelParams init_params(NetKind kind, const NetSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ModelParams params;
  for (auto& d : declare(kind, spec)) {
    Tensor t(d.shape);
    if (d.limit > 0.0) {
      for (double& v : t.values()) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        v = d.limit * (2.0 * u - 1.0);
      }
    }
    params.add(std::move(d.name), std::move(t));
  }
  return params;
}

double init_limit(NetKind kind, const NetSpec& spec, std::string_view name) {
  for (const auto& d : declare(kind, spec)) {
    if (d.name == name) return d.limit;
  }
  throw ArgumentError("no parameter named " + std::string(name));
}

ParamBinding::ParamBinding(Tape& tape, const ModelParams& params, bool trainable)
    : params_(&params) {
  vars_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    vars_.push_back(trainable ? tape.leaf(params.tensor(i))
                              : tape.constant(params.tensor(i)));
  }
}

Var ParamBinding::operator[](std::string_view name) const {
  return vars_[params_->index_of(name)];
}

void ParamBinding::accumulate_grads(const Tape& tape, ModelParams& grads,
                                    double scale) const {
  if (grads.size() != vars_.size()) {
    throw DimensionError("gradient container does not match bound parameters");
  }
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (!tape.has_grad(vars_[i])) continue;
    const auto g = tape.value(vars_[i]).grad();
    auto dst = grads.tensor(i).values();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += scale * g[k];
  }
}

namespace {

void check_input(const NetSpec& spec, const Tensor& features) {
  if (features.rank() != 2 || features.dim(0) != spec.num_bands) {
    throw DimensionError("network expects [" + std::to_string(spec.num_bands) +
                         " x frames] features, got " +
                         shape_to_string(features.shape()));
  }
}

// [bands x frames] -> [1 x frames x bands]
Var as_image(Tape& tape, const Tensor& features) {
  Var x = ad::transpose(tape, tape.constant(features));
  return ad::reshape(tape, x, {1, features.dim(1), features.dim(0)});
}

Var conv_block(Tape& tape, const ParamBinding& p, const std::string& prefix,
               Var x, Pool pool) {
  Var y = ad::conv2d(tape, x, p[prefix + ".weight"], p[prefix + ".bias"]);
  y = ad::relu(tape, y);
  return ad::maxpool2d(tape, y, pool.time, pool.band);
}

Var dense_layer(Tape& tape, const ParamBinding& p, const std::string& prefix,
                Var x) {
  return ad::dense(tape, x, p[prefix + ".weight"], p[prefix + ".bias"]);
}

}  // namespace

Var teacher_forward(Tape& tape, const ParamBinding& params, const NetSpec& spec,
                    const Tensor& features) {
  check_input(spec, features);
  Var x = as_image(tape, features);
  for (std::size_t i = 0; i < spec.conv_channels.size(); ++i) {
    x = conv_block(tape, params, "conv" + std::to_string(i), x,
                   spec.teacher_pools[i]);
  }
  Var pooled = ad::global_mean_pool(tape, x);
  Var logits = dense_layer(tape, params, "out", pooled);
  return ad::reshape(tape, logits, {spec.num_scenes});
}

StudentOutputs student_forward(Tape& tape, const ParamBinding& params,
                               const NetSpec& spec, const Tensor& features) {
  check_input(spec, features);
  const std::size_t frames = features.dim(1);
  Var x = as_image(tape, features);
  for (std::size_t i = 0; i < spec.conv_channels.size(); ++i) {
    x = conv_block(tape, params, "trunk.conv" + std::to_string(i), x,
                   spec.trunk_pools[i]);
  }
  const std::size_t channels = spec.conv_channels.back();

  // Event branch: per-frame sequence of trunk channels.
  Var seq = ad::transpose(tape, ad::reshape(tape, x, {channels, frames}));
  Var h = ad::bigru(tape, seq,
                    {params["event.gru.fwd.wx"], params["event.gru.fwd.wh"],
                     params["event.gru.fwd.b"]},
                    {params["event.gru.bwd.wx"], params["event.gru.bwd.wh"],
                     params["event.gru.bwd.b"]});
  h = ad::relu(tape, dense_layer(tape, params, "event.fc", h));
  Var events = ad::transpose(tape, dense_layer(tape, params, "event.out", h));

  // Scene branch: pool time, then average what is left.
  Var s = x;
  for (std::size_t i = 0; i < spec.scene_channels.size(); ++i) {
    s = conv_block(tape, params, "scene.conv" + std::to_string(i), s,
                   spec.scene_pools[i]);
  }
  Var scene = dense_layer(tape, params, "scene.out", ad::global_mean_pool(tape, s));
  return {events, ad::reshape(tape, scene, {spec.num_scenes})};
}

Model Model::create(NetKind kind, const NetSpec& spec, std::uint64_t seed) {
  Model m;
  m.kind = kind;
  m.spec = spec;
  m.seed = seed;
  m.params = init_params(kind, spec, seed);
  return m;
}

Tensor Model::prepare(const features::LogMelSpectrogram& features) const {
  if (!feature_stats) return features.data;
  return features::standardize(features, *feature_stats).data;
}

namespace {

constexpr std::string_view kCheckpointMagic = "SDCK1\n";

}  // namespace

std::string encode_checkpoint(const Model& model) {
  json header{{"format", "sedkit-checkpoint"},
              {"kind", to_string(model.kind)},
              {"spec", model.spec.to_json()},
              {"num_scenes", model.spec.num_scenes},
              {"num_events", model.spec.num_events},
              {"seed", model.seed},
              {"extra", model.extra}};
  json params = json::array();
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    params.push_back({{"name", model.params.name(i)},
                      {"shape", model.params.tensor(i).shape()}});
  }
  header["params"] = params;
  if (model.feature_stats) {
    header["feature_stats"] = {{"mean", model.feature_stats->mean},
                               {"stddev", model.feature_stats->stddev}};
  } else {
    header["feature_stats"] = nullptr;
  }
  const std::string text = header.dump();
  std::string out(kCheckpointMagic);
  binary::put_le<std::uint64_t>(out, text.size());
  out += text;
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    for (double v : model.params.tensor(i).values()) binary::put_le<double>(out, v);
  }
  return out;
}

Model decode_checkpoint(std::string_view bytes) {
  binary::Reader in(bytes, "checkpoint");
  if (in.bytes(kCheckpointMagic.size()) != kCheckpointMagic) {
    throw ParseError("checkpoint: bad magic");
  }
  const auto len = in.get_le<std::uint64_t>();
  json header;
  try {
    header = json::parse(in.bytes(static_cast<std::size_t>(len)));
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint header: ") + e.what());
  }
  Model m;
  try {
    m.kind = net_kind_from_string(header.at("kind").get<std::string>());
    m.spec = NetSpec::from_json(header.at("spec"));
    m.seed = header.at("seed").get<std::uint64_t>();
    if (header.contains("extra")) m.extra = header.at("extra");
    if (!header.at("feature_stats").is_null()) {
      features::BandStats stats;
      stats.mean = header["feature_stats"].at("mean").get<std::vector<double>>();
      stats.stddev = header["feature_stats"].at("stddev").get<std::vector<double>>();
      m.feature_stats = std::move(stats);
    }
    const ModelParams expected = init_params(m.kind, m.spec, 0);
    const auto& listed = header.at("params");
    if (listed.size() != expected.size()) {
      throw ParseError("checkpoint: parameter list does not match network spec");
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
      const auto name = listed[i].at("name").get<std::string>();
      const auto shape = listed[i].at("shape").get<Shape>();
      if (name != expected.name(i) || shape != expected.tensor(i).shape()) {
        throw ParseError("checkpoint: parameter " + name +
                         " does not match network spec");
      }
      Tensor t(shape);
      for (double& v : t.values()) v = in.get_le<double>();
      m.params.add(name, std::move(t));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint header: ") + e.what());
  }
  if (in.remaining() != 0) throw ParseError("checkpoint: trailing bytes");
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  io::write_file(path, encode_checkpoint(model));
}

Model load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path));
}

std::vector<double> teacher_logits(const Model& teacher, const Tensor& features) {
  if (teacher.kind != NetKind::kTeacher) {
    throw ArgumentError("teacher_logits needs a teacher model");
  }
  Tape tape;
  ParamBinding p(tape, teacher.params, false);
  const Tensor& v = tape.value(teacher_forward(tape, p, teacher.spec, features));
  return {v.values().begin(), v.values().end()};
}

StudentPrediction student_predict(const Model& student, const Tensor& features,
                                  std::size_t chunk_len) {
  if (student.kind != NetKind::kStudent) {
    throw ArgumentError("student_predict needs a student model");
  }
  check_input(student.spec, features);
  const std::size_t d = features.dim(0), n = features.dim(1);
  const std::size_t window = chunk_len == 0 ? n : chunk_len;
  StudentPrediction out;
  out.event_logits = Tensor({student.spec.num_events, n});
  out.event_posteriors = Tensor({student.spec.num_events, n});
  out.scene_logits.assign(student.spec.num_scenes, 0.0);
  std::size_t windows = 0;
  for (std::size_t start = 0; start < n; start += window) {
    const std::size_t valid = std::min(window, n - start);
    Tensor chunk({d, window});
    for (std::size_t b = 0; b < d; ++b) {
      for (std::size_t t = 0; t < valid; ++t) {
        chunk.at(b, t) = features.at(b, start + t);
      }
    }
    Tape tape;
    ParamBinding p(tape, student.params, false);
    StudentOutputs o = student_forward(tape, p, student.spec, chunk);
    const Tensor& logits = tape.value(o.event_logits);
    for (std::size_t m = 0; m < student.spec.num_events; ++m) {
      for (std::size_t t = 0; t < valid; ++t) {
        out.event_logits.at(m, start + t) = logits.at(m, t);
        out.event_posteriors.at(m, start + t) =
            ad::stable_sigmoid(logits.at(m, t));
      }
    }
    const Tensor& scene = tape.value(o.scene_logits);
    for (std::size_t c = 0; c < scene.size(); ++c) out.scene_logits[c] += scene[c];
    ++windows;
  }
  for (double& v : out.scene_logits) v /= static_cast<double>(windows);
  return out;
}

}  // namespace sedkit::nn
