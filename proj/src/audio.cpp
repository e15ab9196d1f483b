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

#include "sedkit/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "binary_io.hpp"
#include "sedkit/error.hpp"
#include "sedkit/io.hpp"

namespace sedkit::audio {

Waveform decode_wav(std::string_view bytes, const std::string& name) {
  binary::Reader in(bytes, name);
  if (in.bytes(4) != "RIFF") throw InputError(name + ": not a RIFF file");
  in.get_le<std::uint32_t>();
  if (in.bytes(4) != "WAVE") throw InputError(name + ": not a WAVE file");

  bool have_fmt = false;
  int channels = 0, bits = 0, rate = 0;
  while (in.remaining() >= 8) {
    const std::string_view id = in.bytes(4);
    const auto size = in.get_le<std::uint32_t>();
    if (id == "fmt ") {
      binary::Reader fmt(in.bytes(size), name + " fmt chunk");
      const auto format = fmt.get_le<std::uint16_t>();
      channels = fmt.get_le<std::uint16_t>();
      rate = static_cast<int>(fmt.get_le<std::uint32_t>());
      fmt.get_le<std::uint32_t>();  // byte rate
      fmt.get_le<std::uint16_t>();  // block align
      bits = fmt.get_le<std::uint16_t>();
      if (format != 1) {
        throw InputError(name + ": only PCM WAVE is supported (format tag " +
                         std::to_string(format) + ")");
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw InputError(name + ": data chunk before fmt chunk");
      if (channels != 1) {
        throw InputError(name + ": expected mono audio, got " +
                         std::to_string(channels) + " channels");
      }
      if (bits != 16) {
        throw InputError(name + ": expected 16-bit samples, got " +
                         std::to_string(bits));
      }
      if (rate <= 0) throw InputError(name + ": invalid sample rate");
      binary::Reader data(in.bytes(size), name + " data chunk");
      Waveform w;
      w.sample_rate = rate;
      w.samples.resize(size / 2);
      for (double& s : w.samples) {
        s = static_cast<double>(data.get_le<std::int16_t>()) / 32768.0;
      }
      return w;
    } else {
      in.bytes(size);
    }
    if (size % 2 == 1 && in.remaining() > 0) in.bytes(1);
  }
  throw InputError(name + ": no data chunk");
}

Waveform read_wav(const std::filesystem::path& path) {
  return decode_wav(io::read_file(path), path.string());
}

std::string encode_wav(const Waveform& wave) {
  if (wave.sample_rate <= 0) throw ArgumentError("sample rate must be > 0");
  const auto data_bytes = static_cast<std::uint32_t>(wave.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  binary::put_le<std::uint32_t>(out, 36 + data_bytes);
  out += "WAVEfmt ";
  binary::put_le<std::uint32_t>(out, 16);
  binary::put_le<std::uint16_t>(out, 1);
  binary::put_le<std::uint16_t>(out, 1);
  binary::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(wave.sample_rate));
  binary::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(wave.sample_rate) * 2);
  binary::put_le<std::uint16_t>(out, 2);
  binary::put_le<std::uint16_t>(out, 16);
  out += "data";
  binary::put_le<std::uint32_t>(out, data_bytes);
  for (double s : wave.samples) {
    const double q = std::round(std::clamp(s, -1.0, 1.0) * 32767.0);
    binary::put_le<std::int16_t>(out, static_cast<std::int16_t>(q));
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const Waveform& wave) {
  io::write_file(path, encode_wav(wave));
}

}  // namespace sedkit::audio
