#pragma once

#include <array>
#include <cstdint>

#include "percog/tensor.hpp"

namespace percog::ingest {

/// Desk-scale stand-in for real dyadic recordings: a speaker stream with
/// smooth pseudo-random behaviour, and a listener whose landmarks are a
/// delayed per-subject transformation of the speaker's signals. The subject
/// map parameters deterministically induce the emitted trait vector, so
/// trait recovery from the searched networks is possible in principle.
struct SynthConfig {
  int clip_frames = 400;
  int delay = 7;              // injected reaction delay, frames in [0,25]
  double noise_sigma = 0.0;   // additive listener landmark noise
  double frame_rate = 25.0;
  enum class MapMode { identity, subject } map_mode = MapMode::subject;
};

struct SynthDyad {
  Tensor speaker_audio;       // (T,64) mel-like features
  Tensor speaker_landmarks;   // (T,68,2)
  Tensor listener_landmarks;  // (T,68,2)
  int injected_delay = 0;
  std::array<double, 5> traits{};      // in [0,1]
  std::array<double, 5> map_params{};  // normalized subject parameters in [0,1]
};

/// Pure function of (config, seed): same arguments give bitwise-identical
/// output.
SynthDyad synth_dyad(const SynthConfig& cfg, std::uint64_t seed);

}  // namespace percog::ingest
