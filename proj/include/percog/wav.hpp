#pragma once

#include <string>
#include <vector>

namespace percog {

struct Waveform {
  int sample_rate = 0;
  std::vector<double> samples;  // mono, in [-1, 1]
};

/// Reads a mono PCM WAV file (16-bit integer or 32-bit float).
Waveform wav_read(const std::string& path);

/// Writes a mono 16-bit PCM WAV file; samples are clipped to [-1, 1].
void wav_write(const std::string& path, const Waveform& w);

}  // namespace percog
