// Copyright 2026 The vda Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include <fmt/format.h>

#include "vda/corpus.hpp"
#include "vda/error.hpp"

namespace vda {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const unsigned char* p) { return std::uint16_t(p[0] | (p[1] << 8)); }
std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(v & 0xFF);
  b.push_back(v >> 8);
}
void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xFF);
}
void put_tag(std::vector<unsigned char>& b, const char* tag) { b.insert(b.end(), tag, tag + 4); }

}  // namespace

AudioSignal load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw FormatError(name + ": not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    std::uint32_t size = read_u32(chunk + 4);
    std::size_t body = pos + 8;
    std::size_t avail = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || size > avail) throw FormatError(name + ": truncated fmt chunk");
      const unsigned char* f = bytes.data() + body;
      format = read_u16(f);
      channels = read_u16(f + 2);
      rate = read_u32(f + 4);
      block_align = read_u16(f + 12);
      bits = read_u16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw FormatError(name + ": truncated extensible fmt chunk");
        format = read_u16(f + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      // Some writers leave the data size unset; clamp to what is present.
      data_size = std::min<std::size_t>(size, avail);
      break;
    }
    if (size > avail) throw FormatError(name + ": chunk overruns file");
    pos = body + size + (size & 1);
  }
  if (!have_fmt) throw FormatError(name + ": missing fmt chunk");
  if (!data) throw FormatError(name + ": missing data chunk");
  if (rate == 0) throw FormatError(name + ": zero sample rate");
  if (channels != 1 && channels != 2)
    throw UnsupportedFormatError(fmt::format("{}: {} channels unsupported", name, channels));

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32)
    throw UnsupportedFormatError(
        fmt::format("{}: format tag {} with {} bits unsupported", name, format, bits));
  const std::size_t sample_bytes = bits / 8;
  if (block_align != sample_bytes * channels) throw FormatError(name + ": inconsistent block align");

  const std::size_t frames = data_size / block_align;
  AudioSignal sig;
  sig.rate = int(rate);
  sig.samples.resize(Eigen::Index(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const unsigned char* p = data + i * block_align + ch * sample_bytes;
      if (pcm16) {
        acc += double(std::int16_t(read_u16(p))) / 32768.0;
      } else {
        std::uint32_t raw = read_u32(p);
        float v;
        std::memcpy(&v, &raw, sizeof v);
        acc += double(v);
      }
    }
    sig.samples[Eigen::Index(i)] = channels == 2 ? 0.5 * acc : acc;
  }
  return sig;
}

void write_wav(const std::filesystem::path& path, const AudioSignal& sig, WavEncoding encoding,
               int channels) {
  if (channels != 1 && channels != 2) throw ConfigError("write_wav: channels must be 1 or 2");
  if (sig.rate <= 0) throw ConfigError("write_wav: rate must be positive");
  const bool pcm = encoding == WavEncoding::kPcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint16_t block = std::uint16_t(bits / 8 * channels);
  const std::uint32_t data_size = std::uint32_t(sig.size()) * block;

  std::vector<unsigned char> b;
  b.reserve(44 + data_size);
  put_tag(b, "RIFF");
  put_u32(b, 36 + data_size);
  put_tag(b, "WAVE");
  put_tag(b, "fmt ");
  put_u32(b, 16);
  put_u16(b, pcm ? kFormatPcm : kFormatFloat);
  put_u16(b, std::uint16_t(channels));
  put_u32(b, std::uint32_t(sig.rate));
  put_u32(b, std::uint32_t(sig.rate) * block);
  put_u16(b, block);
  put_u16(b, bits);
  put_tag(b, "data");
  put_u32(b, data_size);
  for (Eigen::Index i = 0; i < sig.size(); ++i) {
    for (int ch = 0; ch < channels; ++ch) {
      if (pcm) {
        double s = std::clamp(sig.samples[i] * 32768.0, -32768.0, 32767.0);
        put_u16(b, std::uint16_t(std::int16_t(std::lround(s))));
      } else {
        float v = float(sig.samples[i]);
        std::uint32_t raw;
        std::memcpy(&raw, &v, sizeof raw);
        put_u32(b, raw);
      }
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(b.data()), std::streamsize(b.size()));
}

}  // namespace vda
