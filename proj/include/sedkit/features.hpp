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

#ifndef SEDKIT_FEATURES_HPP_
#define SEDKIT_FEATURES_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sedkit/audio.hpp"
#include "sedkit/tensor.hpp"

namespace sedkit::features {

inline constexpr std::size_t kNumBands = 64;
inline constexpr double kFrameSeconds = 0.040;
inline constexpr double kHopSeconds = 0.020;
inline constexpr double kLogFloor = 1e-10;

struct FrameConfig {
  double frame_seconds = kFrameSeconds;
  double hop_seconds = kHopSeconds;
};

std::size_t frame_length_samples(int sample_rate, double frame_seconds);
std::size_t hop_length_samples(int sample_rate, double hop_seconds);
// 1 + floor((length - frame_len) / hop), 0 when length < frame_len.
std::size_t frame_count(std::size_t length, std::size_t frame_len,
                        std::size_t hop);

// Hamming-windowed frames as rows of an [N x frame_len] tensor. Trailing
// samples that do not fill a frame are dropped.
Tensor frame_signal(const audio::Waveform& wave, const FrameConfig& config = {});

std::vector<double> hamming_window(std::size_t length);

std::size_t next_power_of_two(std::size_t n);

// |DFT|^2 over the non-negative frequencies of the zero-padded frame:
// fft_size / 2 + 1 bins. fft_size 0 selects the next power of two >= the
// frame length.
std::vector<double> power_spectrum(std::span<const double> frame,
                                   std::size_t fft_size = 0);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters with centers equally spaced on the mel scale, each
// scaled so its largest weight is exactly 1.
struct MelFilterbank {
  std::size_t num_bands = 0;
  std::size_t num_bins = 0;
  Tensor weights;                 // [num_bands x num_bins]
  std::vector<double> edges_hz;   // num_bands + 2 points
  std::vector<double> centers_hz() const;
};

// fmax <= 0 selects sample_rate / 2.
MelFilterbank build_mel_filterbank(int sample_rate, std::size_t fft_size,
                                   std::size_t num_bands = kNumBands,
                                   double fmin = 0.0, double fmax = 0.0);

struct LogMelSpectrogram {
  Tensor data;  // [bands x frames]
  double hop_seconds = kHopSeconds;
  std::string clip_id;

  std::size_t bands() const { return data.dim(0); }
  std::size_t frames() const { return data.dim(1); }
};

// ln(filterbank . power spectrum + 1e-10) per frame.
LogMelSpectrogram log_mel_energy(const audio::Waveform& wave,
                                 std::size_t num_bands = kNumBands,
                                 const FrameConfig& config = {});

struct BandStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

// Per-band mean and population standard deviation over all frames.
BandStats compute_band_stats(std::span<const LogMelSpectrogram> features);
LogMelSpectrogram standardize(const LogMelSpectrogram& features,
                              const BandStats& stats);

// "SDFC" | u16 version | u32 D | u32 N | f64 hop | D*N f64, little-endian.
inline constexpr std::uint16_t kCacheVersion = 1;
std::string encode_feature_cache(const LogMelSpectrogram& features);
LogMelSpectrogram decode_feature_cache(std::string_view bytes,
                                       const std::string& clip_id = "");
void write_feature_cache(const std::filesystem::path& path,
                         const LogMelSpectrogram& features);
LogMelSpectrogram read_feature_cache(const std::filesystem::path& path,
                                     const std::string& clip_id = "");

}  // namespace sedkit::features

#endif  // SEDKIT_FEATURES_HPP_
