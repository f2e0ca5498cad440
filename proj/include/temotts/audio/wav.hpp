#pragma once

// Minimal RIFF/WAV reader and writer. Reads 16-bit PCM and 32-bit float,
// mono or multi-channel (channels averaged); writes 16-bit PCM mono.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "temotts/core/common.hpp"

namespace temotts::audio {

struct WavData {
  std::vector<double> samples;  // mono, in [-1, 1]
  std::size_t sample_rate = 0;
};

inline WavData read_wav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingArtifactError(path.string());
  auto read_u32 = [&]() {
    std::uint32_t v;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  auto read_u16 = [&]() {
    std::uint16_t v;
    is.read(reinterpret_cast<char*>(&v), 2);
    return v;
  };
  char tag[4];
  is.read(tag, 4);
  if (!is || std::memcmp(tag, "RIFF", 4) != 0) throw Error("not a WAV file: " + path.string());
  read_u32();  // riff size
  is.read(tag, 4);
  if (std::memcmp(tag, "WAVE", 4) != 0) throw Error("not a WAV file: " + path.string());

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::vector<char> payload;
  while (is.read(tag, 4)) {
    const std::uint32_t chunk_size = read_u32();
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = read_u16();
      channels = read_u16();
      rate = read_u32();
      read_u32();  // byte rate
      read_u16();  // block align
      bits = read_u16();
      if (chunk_size > 16) is.seekg(chunk_size - 16, std::ios::cur);
    } else if (std::memcmp(tag, "data", 4) == 0) {
      payload.resize(chunk_size);
      is.read(payload.data(), chunk_size);
      break;
    } else {
      is.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }
  if (payload.empty()) throw Error("WAV has no data chunk: " + path.string());
  if (channels == 0) throw Error("WAV has no fmt chunk: " + path.string());

  WavData out;
  out.sample_rate = rate;
  const std::size_t bytes_per = bits / 8;
  const std::size_t frames = payload.size() / (bytes_per * channels);
  out.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const char* p = payload.data() + (f * channels + c) * bytes_per;
      if (format == 1 && bits == 16) {
        std::int16_t s;
        std::memcpy(&s, p, 2);
        acc += static_cast<double>(s) / 32768.0;
      } else if (format == 3 && bits == 32) {
        float s;
        std::memcpy(&s, p, 4);
        acc += static_cast<double>(s);
      } else {
        throw Error("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                    std::to_string(bits) + " bit): " + path.string());
      }
    }
    out.samples[f] = acc / channels;
  }
  return out;
}

inline void write_wav(const std::filesystem::path& path, const std::vector<double>& samples,
                      std::size_t sample_rate) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open for writing: " + path.string());
  auto write_u32 = [&](std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
  auto write_u16 = [&](std::uint16_t v) { os.write(reinterpret_cast<const char*>(&v), 2); };
  const std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * 2);
  os.write("RIFF", 4);
  write_u32(36 + data_size);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  write_u32(16);
  write_u16(1);  // PCM
  write_u16(1);  // mono
  write_u32(static_cast<std::uint32_t>(sample_rate));
  write_u32(static_cast<std::uint32_t>(sample_rate * 2));
  write_u16(2);
  write_u16(16);
  os.write("data", 4);
  write_u32(data_size);
  for (double s : samples) {
    const double clipped = std::max(-1.0, std::min(1.0, s));
    const auto v = static_cast<std::int16_t>(std::lround(clipped * 32767.0));
    os.write(reinterpret_cast<const char*>(&v), 2);
  }
  if (!os) throw Error("write failed: " + path.string());
}

}  // namespace temotts::audio
