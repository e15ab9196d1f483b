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

#ifndef SEDKIT_AUDIO_HPP_
#define SEDKIT_AUDIO_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sedkit::audio {

// Mono signal with samples nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// RIFF/WAVE, 16-bit PCM, mono only. Multichannel input is rejected.
Waveform decode_wav(std::string_view bytes, const std::string& name = "wav");
Waveform read_wav(const std::filesystem::path& path);

// Samples are clipped to [-1, 1] and quantized to 16 bits.
std::string encode_wav(const Waveform& wave);
void write_wav(const std::filesystem::path& path, const Waveform& wave);

}  // namespace sedkit::audio

#endif  // SEDKIT_AUDIO_HPP_
