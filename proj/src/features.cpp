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

#include "sedkit/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "binary_io.hpp"
#include "sedkit/error.hpp"
#include "sedkit/io.hpp"

namespace sedkit::features {

std::size_t frame_length_samples(int sample_rate, double frame_seconds) {
  return static_cast<std::size_t>(std::lround(frame_seconds * sample_rate));
}

std::size_t hop_length_samples(int sample_rate, double hop_seconds) {
  return static_cast<std::size_t>(std::lround(hop_seconds * sample_rate));
}

std::size_t frame_count(std::size_t length, std::size_t frame_len,
                        std::size_t hop) {
  if (length < frame_len) return 0;
  return 1 + (length - frame_len) / hop;
}

std::vector<double> hamming_window(std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (length == 1) return w;
  const double denom = static_cast<double>(length - 1);
  for (std::size_t i = 0; i < length; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / denom);
  }
  return w;
}

Tensor frame_signal(const audio::Waveform& wave, const FrameConfig& config) {
  if (wave.sample_rate <= 0) {
    throw InputError("sample rate must be positive, got " +
                     std::to_string(wave.sample_rate));
  }
  const std::size_t len = frame_length_samples(wave.sample_rate,
                                               config.frame_seconds);
  const std::size_t hop = hop_length_samples(wave.sample_rate,
                                             config.hop_seconds);
  if (len == 0 || hop == 0) {
    throw ArgumentError("frame and hop must span at least one sample");
  }
  if (wave.samples.size() < len) {
    throw InputError("audio has " + std::to_string(wave.samples.size()) +
                     " samples; at least " + std::to_string(len) + " (" +
                     std::to_string(config.frame_seconds) +
                     " s) are needed for one frame");
  }
  const std::size_t n = frame_count(wave.samples.size(), len, hop);
  const std::vector<double> window = hamming_window(len);
  Tensor frames({n, len});
  for (std::size_t f = 0; f < n; ++f) {
    const double* src = wave.samples.data() + f * hop;
    double* dst = frames.data() + f * len;
    for (std::size_t i = 0; i < len; ++i) dst[i] = src[i] * window[i];
  }
  return frames;
}

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

namespace {

// In-place iterative radix-2 FFT; size must be a power of two.
void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> w = std::polar(1.0, angle * k);
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

}  // namespace

std::vector<double> power_spectrum(std::span<const double> frame,
                                   std::size_t fft_size) {
  if (fft_size == 0) fft_size = next_power_of_two(frame.size());
  if (fft_size < frame.size() || next_power_of_two(fft_size) != fft_size) {
    throw ArgumentError("fft size " + std::to_string(fft_size) +
                        " must be a power of two >= frame length " +
                        std::to_string(frame.size()));
  }
  std::vector<std::complex<double>> buf(fft_size);
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
  fft(buf);
  std::vector<double> power(fft_size / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(buf[k]);
  return power;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::vector<double> MelFilterbank::centers_hz() const {
  return {edges_hz.begin() + 1, edges_hz.end() - 1};
}

MelFilterbank build_mel_filterbank(int sample_rate, std::size_t fft_size,
                                   std::size_t num_bands, double fmin,
                                   double fmax) {
  if (sample_rate <= 0) throw ArgumentError("sample rate must be positive");
  if (num_bands == 0) throw ArgumentError("need at least one mel band");
  if (fft_size < 2) throw ArgumentError("fft size must be >= 2");
  const double nyquist = sample_rate / 2.0;
  if (fmax <= 0.0) fmax = nyquist;
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= nyquist)) {
    throw ArgumentError("invalid mel range [" + std::to_string(fmin) + ", " +
                        std::to_string(fmax) + "] Hz for sample rate " +
                        std::to_string(sample_rate));
  }

  MelFilterbank fb;
  fb.num_bands = num_bands;
  fb.num_bins = fft_size / 2 + 1;
  const double mel_lo = hz_to_mel(fmin), mel_hi = hz_to_mel(fmax);
  fb.edges_hz.resize(num_bands + 2);
  for (std::size_t i = 0; i < fb.edges_hz.size(); ++i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                    static_cast<double>(num_bands + 1);
    fb.edges_hz[i] = mel_to_hz(mel);
  }
  fb.edges_hz.front() = fmin;
  fb.edges_hz.back() = fmax;

  const double bin_hz = static_cast<double>(sample_rate) / fft_size;
  fb.weights = Tensor({num_bands, fb.num_bins});
  for (std::size_t b = 0; b < num_bands; ++b) {
    const double lo = fb.edges_hz[b], mid = fb.edges_hz[b + 1],
                 hi = fb.edges_hz[b + 2];
    double peak = 0.0;
    for (std::size_t k = 0; k < fb.num_bins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > lo && f <= mid) {
        w = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        w = (hi - f) / (hi - mid);
      }
      fb.weights.at(b, k) = w;
      peak = std::max(peak, w);
    }
    if (peak == 0.0) {
      // Filter narrower than one bin: take the bin nearest its center.
      const auto k = std::min<std::size_t>(
          fb.num_bins - 1, static_cast<std::size_t>(std::lround(mid / bin_hz)));
      fb.weights.at(b, k) = 1.0;
      continue;
    }
    for (std::size_t k = 0; k < fb.num_bins; ++k) fb.weights.at(b, k) /= peak;
  }
  return fb;
}

LogMelSpectrogram log_mel_energy(const audio::Waveform& wave,
                                 std::size_t num_bands,
                                 const FrameConfig& config) {
  const Tensor frames = frame_signal(wave, config);
  const std::size_t n = frames.dim(0), len = frames.dim(1);
  const std::size_t fft_size = next_power_of_two(len);
  const MelFilterbank fb =
      build_mel_filterbank(wave.sample_rate, fft_size, num_bands);

  LogMelSpectrogram out;
  out.hop_seconds = config.hop_seconds;
  out.data = Tensor({num_bands, n});
  for (std::size_t f = 0; f < n; ++f) {
    const auto power = power_spectrum(
        std::span<const double>(frames.data() + f * len, len), fft_size);
    for (std::size_t b = 0; b < num_bands; ++b) {
      const double* w = fb.weights.data() + b * fb.num_bins;
      double energy = 0.0;
      for (std::size_t k = 0; k < fb.num_bins; ++k) energy += w[k] * power[k];
      out.data.at(b, f) = std::log(energy + kLogFloor);
    }
  }
  return out;
}

BandStats compute_band_stats(std::span<const LogMelSpectrogram> features) {
  if (features.empty()) throw DataError("no features to compute stats from");
  const std::size_t d = features.front().bands();
  std::vector<double> sum(d, 0.0), sq(d, 0.0);
  double count = 0.0;
  for (const auto& f : features) {
    if (f.bands() != d) {
      throw DimensionError("band count differs between feature matrices");
    }
    for (std::size_t b = 0; b < d; ++b) {
      for (std::size_t n = 0; n < f.frames(); ++n) sum[b] += f.data.at(b, n);
    }
    count += static_cast<double>(f.frames());
  }
  BandStats stats;
  stats.mean.resize(d);
  stats.stddev.resize(d);
  for (std::size_t b = 0; b < d; ++b) stats.mean[b] = sum[b] / count;
  for (const auto& f : features) {
    for (std::size_t b = 0; b < d; ++b) {
      for (std::size_t n = 0; n < f.frames(); ++n) {
        const double dev = f.data.at(b, n) - stats.mean[b];
        sq[b] += dev * dev;
      }
    }
  }
  for (std::size_t b = 0; b < d; ++b) stats.stddev[b] = std::sqrt(sq[b] / count);
  return stats;
}

LogMelSpectrogram standardize(const LogMelSpectrogram& features,
                              const BandStats& stats) {
  const std::size_t d = features.bands();
  if (stats.mean.size() != d || stats.stddev.size() != d) {
    throw DimensionError("band stats for " + std::to_string(stats.mean.size()) +
                         " bands applied to " + std::to_string(d) + " bands");
  }
  for (std::size_t b = 0; b < d; ++b) {
    if (!(stats.stddev[b] > 0.0)) {
      throw ArgumentError("band " + std::to_string(b) +
                          " has zero standard deviation");
    }
  }
  LogMelSpectrogram out = features;
  for (std::size_t b = 0; b < d; ++b) {
    for (std::size_t n = 0; n < features.frames(); ++n) {
      out.data.at(b, n) =
          (features.data.at(b, n) - stats.mean[b]) / stats.stddev[b];
    }
  }
  return out;
}

std::string encode_feature_cache(const LogMelSpectrogram& features) {
  std::string out = "SDFC";
  binary::put_le<std::uint16_t>(out, kCacheVersion);
  binary::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(features.bands()));
  binary::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(features.frames()));
  binary::put_le<double>(out, features.hop_seconds);
  for (double v : features.data.values()) binary::put_le<double>(out, v);
  return out;
}

LogMelSpectrogram decode_feature_cache(std::string_view bytes,
                                       const std::string& clip_id) {
  binary::Reader in(bytes, "feature cache");
  if (in.bytes(4) != "SDFC") throw ParseError("feature cache: bad magic");
  const auto version = in.get_le<std::uint16_t>();
  if (version != kCacheVersion) {
    throw ParseError("feature cache: unsupported version " +
                     std::to_string(version));
  }
  const auto d = in.get_le<std::uint32_t>();
  const auto n = in.get_le<std::uint32_t>();
  LogMelSpectrogram out;
  out.hop_seconds = in.get_le<double>();
  out.clip_id = clip_id;
  if (d == 0 || n == 0) throw ParseError("feature cache: empty matrix");
  if (in.remaining() != static_cast<std::size_t>(d) * n * sizeof(double)) {
    throw ParseError("feature cache: payload size does not match " +
                     std::to_string(d) + "x" + std::to_string(n));
  }
  out.data = Tensor({d, n});
  for (double& v : out.data.values()) v = in.get_le<double>();
  return out;
}

void write_feature_cache(const std::filesystem::path& path,
                         const LogMelSpectrogram& features) {
  io::write_file(path, encode_feature_cache(features));
}

LogMelSpectrogram read_feature_cache(const std::filesystem::path& path,
                                     const std::string& clip_id) {
  return decode_feature_cache(io::read_file(path), clip_id);
}

}  // namespace sedkit::features
