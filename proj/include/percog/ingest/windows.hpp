#pragma once

#include <vector>

#include "percog/tensor.hpp"

namespace percog::ingest {

constexpr int kInputFrames = 80;      // speaker window length
constexpr int kCandidateFrames = 105; // listener ground-truth candidates
constexpr int kMaxDelay = 25;         // candidate delay range 0..25

/// One training sample. The listener candidate window starts at the same
/// clip time as the speaker window and extends kMaxDelay frames past it.
struct DyadWindow {
  Tensor speaker_audio;      // (80,64)
  Tensor speaker_landmarks;  // (80,68,2)
  Tensor listener_gt;        // (105,68,2)
  int start_frame = 0;
};

struct WindowingResult {
  std::vector<DyadWindow> windows;
  bool too_short = false;  // clip shorter than 105 frames
};

/// Tiles the clip with the given stride; a window is emitted for every start
/// s in {start, start+stride, ...} with s + 105 <= clip length.
WindowingResult window_dyad(const Tensor& speaker_audio, const Tensor& speaker_lm,
                            const Tensor& listener_lm, int start, int stride);

}  // namespace percog::ingest
