#include "percog/wav.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace percog {

namespace {

template <typename T>
T read_le(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

template <typename T>
void write_le(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

Waveform wav_read(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("wav_read: cannot open " + path);
  char tag[4];
  f.read(tag, 4);
  if (std::memcmp(tag, "RIFF", 4) != 0)
    throw std::runtime_error("wav_read: not a RIFF file: " + path);
  read_le<std::uint32_t>(f);
  f.read(tag, 4);
  if (std::memcmp(tag, "WAVE", 4) != 0)
    throw std::runtime_error("wav_read: not a WAVE file: " + path);

  Waveform w;
  std::uint16_t format = 0, channels = 0, bits = 0;
  while (f.read(tag, 4)) {
    std::uint32_t size = read_le<std::uint32_t>(f);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = read_le<std::uint16_t>(f);
      channels = read_le<std::uint16_t>(f);
      w.sample_rate = static_cast<int>(read_le<std::uint32_t>(f));
      read_le<std::uint32_t>(f);
      read_le<std::uint16_t>(f);
      bits = read_le<std::uint16_t>(f);
      f.seekg(size - 16, std::ios::cur);
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (channels != 1)
        throw std::runtime_error("wav_read: only mono supported: " + path);
      if (format == 1 && bits == 16) {
        std::size_t n = size / 2;
        w.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i)
          w.samples[i] = read_le<std::int16_t>(f) / 32768.0;
      } else if (format == 3 && bits == 32) {
        std::size_t n = size / 4;
        w.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) w.samples[i] = read_le<float>(f);
      } else {
        throw std::runtime_error("wav_read: unsupported encoding in " + path);
      }
      return w;
    } else {
      f.seekg(size + (size & 1), std::ios::cur);
    }
  }
  throw std::runtime_error("wav_read: no data chunk in " + path);
}

void wav_write(const std::string& path, const Waveform& w) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("wav_write: cannot open " + path);
  std::uint32_t data_size = static_cast<std::uint32_t>(w.samples.size() * 2);
  f.write("RIFF", 4);
  write_le<std::uint32_t>(f, 36 + data_size);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  write_le<std::uint32_t>(f, 16);
  write_le<std::uint16_t>(f, 1);
  write_le<std::uint16_t>(f, 1);
  write_le<std::uint32_t>(f, static_cast<std::uint32_t>(w.sample_rate));
  write_le<std::uint32_t>(f, static_cast<std::uint32_t>(w.sample_rate * 2));
  write_le<std::uint16_t>(f, 2);
  write_le<std::uint16_t>(f, 16);
  f.write("data", 4);
  write_le<std::uint32_t>(f, data_size);
  for (double s : w.samples) {
    double c = std::clamp(s, -1.0, 1.0);
    write_le<std::int16_t>(f, static_cast<std::int16_t>(c * 32767.0));
  }
  if (!f) throw std::runtime_error("wav_write: write failed for " + path);
}

}  // namespace percog
