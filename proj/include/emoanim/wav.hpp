// emoanim/wav.hpp

// Copyright 2026  Emoanim Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef EMOANIM_WAV_HPP_
#define EMOANIM_WAV_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace emoanim {

// Mono audio in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_s() const {
    return sample_rate > 0
               ? static_cast<double>(samples.size()) / sample_rate
               : 0.0;
  }
};

namespace detail {

inline std::uint32_t rd_u32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error(path + ": truncated WAV");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t(b[3]) << 24);
}

inline std::uint16_t rd_u16(std::istream& is, const std::string& path) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  if (!is) throw std::runtime_error(path + ": truncated WAV");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

}  // namespace detail

// Reads a RIFF/WAVE file containing 16-bit PCM. Mono is returned as-is;
// stereo is averaged down to mono. Other layouts are rejected.
inline AudioClip read_wav(const std::filesystem::path& p) {
  const std::string path = p.string();
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);

  char tag[4];
  is.read(tag, 4);
  if (!is || std::string(tag, 4) != "RIFF")
    throw std::runtime_error(path + ": not a RIFF file");
  detail::rd_u32(is, path);  // riff size, unused
  is.read(tag, 4);
  if (!is || std::string(tag, 4) != "WAVE")
    throw std::runtime_error(path + ": not a WAVE file");

  int channels = 0, sample_rate = 0, bits = 0;
  bool have_fmt = false;
  std::vector<char> data;

  while (is.read(tag, 4)) {
    std::uint32_t chunk_size = detail::rd_u32(is, path);
    std::string id(tag, 4);
    if (id == "fmt ") {
      std::uint16_t format = detail::rd_u16(is, path);
      channels = detail::rd_u16(is, path);
      sample_rate = static_cast<int>(detail::rd_u32(is, path));
      detail::rd_u32(is, path);  // byte rate
      detail::rd_u16(is, path);  // block align
      bits = detail::rd_u16(is, path);
      if (chunk_size > 16) is.seekg(chunk_size - 16, std::ios::cur);
      if (format != 1)
        throw std::runtime_error(path + ": only PCM WAV is supported");
      have_fmt = true;
    } else if (id == "data") {
      data.resize(chunk_size);
      is.read(data.data(), chunk_size);
      if (!is) throw std::runtime_error(path + ": truncated data chunk");
    } else {
      is.seekg(chunk_size, std::ios::cur);
    }
    if (chunk_size % 2 == 1) is.seekg(1, std::ios::cur);  // chunks are padded
  }

  if (!have_fmt) throw std::runtime_error(path + ": missing fmt chunk");
  if (data.empty()) throw std::runtime_error(path + ": missing data chunk");
  if (bits != 16)
    throw std::runtime_error(path + ": only 16-bit PCM is supported (got " +
                             std::to_string(bits) + "-bit)");
  if (channels != 1 && channels != 2)
    throw std::runtime_error(path + ": unsupported channel count " +
                             std::to_string(channels));
  if (sample_rate <= 0)
    throw std::runtime_error(path + ": bad sample rate");

  const auto* s = reinterpret_cast<const std::int16_t*>(data.data());
  std::size_t n = data.size() / 2;
  AudioClip clip;
  clip.sample_rate = sample_rate;
  if (channels == 1) {
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) clip.samples[i] = s[i] / 32768.0;
  } else {
    clip.samples.resize(n / 2);
    for (std::size_t i = 0; i < n / 2; ++i)
      clip.samples[i] = (s[2 * i] + s[2 * i + 1]) / (2.0 * 32768.0);
  }
  return clip;
}

// Writes 16-bit PCM, mono or interleaved stereo (both channels equal is
// what the tests use stereo for).
inline void write_wav(const std::filesystem::path& p, const AudioClip& clip,
                      int channels = 1) {
  if (clip.sample_rate <= 0)
    throw std::invalid_argument("write_wav: sample rate must be positive");
  if (channels != 1 && channels != 2)
    throw std::invalid_argument("write_wav: channels must be 1 or 2");

  std::vector<std::int16_t> pcm;
  pcm.reserve(clip.samples.size() * channels);
  for (double v : clip.samples) {
    double c = std::clamp(v, -1.0, 1.0);
    auto q = static_cast<std::int16_t>(std::lround(c * 32767.0));
    for (int ch = 0; ch < channels; ++ch) pcm.push_back(q);
  }

  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(pcm.size() * 2);
  const std::uint32_t byte_rate = clip.sample_rate * channels * 2;
  const std::uint16_t block_align = static_cast<std::uint16_t>(channels * 2);

  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  auto w32 = [&](std::uint32_t v) { os.write(reinterpret_cast<char*>(&v), 4); };
  auto w16 = [&](std::uint16_t v) { os.write(reinterpret_cast<char*>(&v), 2); };

  os.write("RIFF", 4);
  w32(36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  w32(16);
  w16(1);  // PCM
  w16(static_cast<std::uint16_t>(channels));
  w32(static_cast<std::uint32_t>(clip.sample_rate));
  w32(byte_rate);
  w16(block_align);
  w16(16);
  os.write("data", 4);
  w32(data_bytes);
  os.write(reinterpret_cast<const char*>(pcm.data()), data_bytes);
}

}  // namespace emoanim

#endif  // EMOANIM_WAV_HPP_
