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
#include <numbers>
#include <random>
#include <string>

#include "binary_io_fixture.hpp"
#include "doctest.h"
#include "sedkit/audio.hpp"
#include "sedkit/error.hpp"
#include "sedkit/features.hpp"

using namespace sedkit;
using namespace sedkit::features;
using sedkit::audio::Waveform;

namespace {

Waveform noise(double seconds, int rate, std::uint64_t seed, double amp = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-amp, amp);
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(static_cast<std::size_t>(std::lround(seconds * rate)));
  for (double& s : w.samples) s = dist(rng);
  return w;
}

}  // namespace

TEST_CASE("frame_signal counts") {
  CHECK(frame_signal(noise(1.0, 44100, 1)).dim(0) == 49);
  CHECK(frame_signal(noise(0.040, 44100, 1)).dim(0) == 1);
  CHECK(frame_signal(noise(1.0, 44100, 1)).dim(1) == 1764);
  try {
    frame_signal(noise(0.039, 44100, 1));
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("1764") != std::string::npos);
  }
}

TEST_CASE("frame count formula holds for random lengths") {
  std::mt19937_64 rng(2);
  const int rate = 8000;
  const double frame_len = 320, hop = 160;
  std::uniform_int_distribution<std::size_t> len_dist(320, 40000);
  for (int i = 0; i < 1000; ++i) {
    Waveform w;
    w.sample_rate = rate;
    w.samples.assign(len_dist(rng), 0.0);
    const double expected =
        1.0 + std::floor((static_cast<double>(w.samples.size()) - frame_len) / hop);
    REQUIRE(static_cast<double>(frame_signal(w).dim(0)) == expected);
  }
}

TEST_CASE("frames are Hamming windowed") {
  Waveform w;
  w.sample_rate = 1000;
  w.samples.assign(100, 1.0);
  Tensor frames = frame_signal(w);
  CHECK(frames.dim(1) == 40);
  CHECK(frames.at(0, 0) == doctest::Approx(0.08));
  CHECK(frames.at(0, 39) == doctest::Approx(0.08));
  CHECK(frames.at(1, 0) == frames.at(0, 0));
}

TEST_CASE("power_spectrum") {
  SUBCASE("silence") {
    std::vector<double> zeros(1764, 0.0);
    auto p = power_spectrum(zeros);
    CHECK(p.size() == 1025);
    for (double v : p) CHECK(v == 0.0);
  }
  SUBCASE("bin-centered sinusoid") {
    const std::size_t n = 1024, bin = 37;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = std::sin(2.0 * std::numbers::pi * bin * i / n + 0.3);
    }
    auto p = power_spectrum(x);
    double total = 0.0;
    for (double v : p) total += v;
    CHECK(p[bin] / total >= 0.9);
  }
  SUBCASE("Parseval on a windowed, zero-padded frame") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> x(1764);
    const auto window = hamming_window(x.size());
    double energy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = dist(rng) * window[i];
      energy += x[i] * x[i];
    }
    auto p = power_spectrum(x);
    const std::size_t fft = 2048;
    double full = p.front() + p.back();
    for (std::size_t k = 1; k + 1 < p.size(); ++k) full += 2.0 * p[k];
    CHECK(std::abs(full / fft - energy) / energy < 1e-6);
  }
  SUBCASE("fft size must be a power of two covering the frame") {
    std::vector<double> x(10, 1.0);
    CHECK_THROWS_AS(power_spectrum(x, 8), ArgumentError);
    CHECK_THROWS_AS(power_spectrum(x, 24), ArgumentError);
    CHECK(power_spectrum(x, 32).size() == 17);
  }
}

TEST_CASE("mel filterbank") {
  SUBCASE("single band spans the full range") {
    auto fb = build_mel_filterbank(16000, 512, 1);
    CHECK(fb.edges_hz.front() == 0.0);
    CHECK(fb.edges_hz.back() == 8000.0);
    double first = -1, last = -1;
    for (std::size_t k = 0; k < fb.num_bins; ++k) {
      if (fb.weights.at(0, k) > 0) {
        if (first < 0) first = static_cast<double>(k);
        last = static_cast<double>(k);
      }
    }
    CHECK(first == 1);
    CHECK(last == 255);
  }
  for (int rate : {16000, 44100}) {
    const std::size_t fft = next_power_of_two(
        frame_length_samples(rate, kFrameSeconds));
    auto fb = build_mel_filterbank(rate, fft);
    CAPTURE(rate);
    CHECK(fb.weights.shape() == Shape{64, fft / 2 + 1});
    auto centers = fb.centers_hz();
    const double step = hz_to_mel(centers[1]) - hz_to_mel(centers[0]);
    for (std::size_t b = 1; b < centers.size(); ++b) {
      CHECK(std::abs(hz_to_mel(centers[b]) - hz_to_mel(centers[b - 1]) - step) <
            1e-9);
      CHECK(centers[b] > centers[b - 1]);
    }
    for (std::size_t b = 0; b < 64; ++b) {
      double peak = 0.0, total = 0.0;
      for (std::size_t k = 0; k < fb.num_bins; ++k) {
        CHECK(fb.weights.at(b, k) >= 0.0);
        peak = std::max(peak, fb.weights.at(b, k));
        total += fb.weights.at(b, k);
      }
      CHECK(peak == 1.0);
      CHECK(total > 0.0);
    }
    const double bin_hz = static_cast<double>(rate) / fft;
    for (std::size_t k = 0; k < fb.num_bins; ++k) {
      const double f = k * bin_hz;
      if (f < centers.front() || f > centers.back()) continue;
      double covered = 0.0;
      for (std::size_t b = 0; b < 64; ++b) covered += fb.weights.at(b, k);
      CHECK(covered > 0.0);
    }
  }
  CHECK_THROWS_AS(build_mel_filterbank(16000, 512, 64, 4000, 3000),
                  ArgumentError);
  CHECK_THROWS_AS(build_mel_filterbank(16000, 512, 64, 0, 9000), ArgumentError);
  CHECK_THROWS_AS(build_mel_filterbank(16000, 512, 0), ArgumentError);
}

TEST_CASE("log_mel_energy") {
  SUBCASE("silence sits at the log floor") {
    Waveform w;
    w.sample_rate = 16000;
    w.samples.assign(16000, 0.0);
    auto f = log_mel_energy(w);
    for (double v : f.data.values()) CHECK(v == std::log(kLogFloor));
  }
  SUBCASE("shape for one second at 44.1 kHz") {
    auto f = log_mel_energy(noise(1.0, 44100, 4));
    CHECK(f.data.shape() == Shape{64, 49});
    CHECK(f.data.all_finite());
  }
  SUBCASE("doubling amplitude adds ln 4") {
    Waveform w = noise(0.5, 16000, 5, 0.2);
    Waveform loud = w;
    for (double& s : loud.samples) s *= 2.0;
    auto a = log_mel_energy(w);
    auto b = log_mel_energy(loud);
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      if (a.data[i] > std::log(kLogFloor) + 20.0) {
        CHECK(b.data[i] - a.data[i] == doctest::Approx(std::log(4.0)).epsilon(1e-9));
      }
    }
  }
  SUBCASE("deterministic and shift-equivariant by one hop") {
    Waveform w = noise(0.6, 16000, 6);
    auto a = log_mel_energy(w);
    auto again = log_mel_energy(w);
    CHECK(a.data.values().size() == again.data.values().size());
    CHECK(std::equal(a.data.values().begin(), a.data.values().end(),
                     again.data.values().begin()));

    Waveform shifted = w;
    shifted.samples.insert(shifted.samples.begin(), 320, 0.0);
    auto s = log_mel_energy(shifted);
    REQUIRE(s.frames() == a.frames() + 1);
    for (std::size_t b = 0; b < 64; ++b) {
      for (std::size_t n = 0; n < a.frames(); ++n) {
        REQUIRE(s.data.at(b, n + 1) == a.data.at(b, n));
      }
    }
  }
}

TEST_CASE("standardize") {
  LogMelSpectrogram f = log_mel_energy(noise(0.5, 16000, 7));
  BandStats unit{std::vector<double>(64, 0.0), std::vector<double>(64, 1.0)};
  auto same = standardize(f, unit);
  for (std::size_t i = 0; i < f.data.size(); ++i) CHECK(same.data[i] == f.data[i]);

  BandStats own = compute_band_stats(std::span(&f, 1));
  auto z = standardize(f, own);
  BandStats after = compute_band_stats(std::span(&z, 1));
  for (std::size_t b = 0; b < 64; ++b) {
    CHECK(std::abs(after.mean[b]) < 1e-9);
    CHECK(std::abs(after.stddev[b] - 1.0) < 1e-9);
  }

  LogMelSpectrogram flat = f;
  for (std::size_t n = 0; n < flat.frames(); ++n) flat.data.at(3, n) = -2.0;
  BandStats flat_stats = compute_band_stats(std::span(&flat, 1));
  CHECK_THROWS_AS(standardize(flat, flat_stats), ArgumentError);
}

TEST_CASE("feature cache format") {
  LogMelSpectrogram f;
  f.data = Tensor({2, 3}, {1, 2, 3, 4, 5, -6.5});
  f.hop_seconds = 0.02;
  const std::string bytes = encode_feature_cache(f);
  CHECK(bytes.size() == 4 + 2 + 4 + 4 + 8 + 6 * 8);
  CHECK(bytes.substr(0, 4) == "SDFC");
  CHECK(sedkit::testing::le_u16(bytes, 4) == 1);
  CHECK(sedkit::testing::le_u32(bytes, 6) == 2);
  CHECK(sedkit::testing::le_u32(bytes, 10) == 3);
  CHECK(sedkit::testing::le_f64(bytes, 14) == 0.02);
  CHECK(sedkit::testing::le_f64(bytes, 22 + 5 * 8) == -6.5);

  auto back = decode_feature_cache(bytes, "x");
  CHECK(back.clip_id == "x");
  CHECK(back.data.shape() == f.data.shape());
  CHECK(std::equal(back.data.values().begin(), back.data.values().end(),
                   f.data.values().begin()));

  CHECK_THROWS_AS(decode_feature_cache("XXXX" + bytes.substr(4)), ParseError);
  CHECK_THROWS_AS(decode_feature_cache(bytes.substr(0, bytes.size() - 3)),
                  ParseError);
}

TEST_CASE("wav io") {
  Waveform w = noise(0.1, 16000, 8, 0.9);
  auto back = audio::decode_wav(audio::encode_wav(w));
  CHECK(back.sample_rate == 16000);
  REQUIRE(back.samples.size() == w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    CHECK(std::abs(back.samples[i] - w.samples[i]) < 1.0 / 16384);
  }

  std::string stereo = audio::encode_wav(w);
  stereo[22] = 2;  // channel count
  try {
    audio::decode_wav(stereo, "stereo.wav");
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("mono") != std::string::npos);
  }
  CHECK_THROWS_AS(audio::decode_wav("not a wav file at all"), InputError);
}
