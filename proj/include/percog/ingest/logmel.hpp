#pragma once

#include <vector>

#include "percog/tensor.hpp"

namespace percog::ingest {

struct MelSpectrogram {
  Tensor bins;  // (T,64), natural-log mel energies
  int frames() const { return bins.dim(0); }
};

constexpr double kLogFloorEps = 1e-6;  // log(x + 1e-6); silence -> log(1e-6)
constexpr int kMelBins = 64;

/// 64-bin log-mel spectrogram: 40 ms Hann window, 40 ms stride, power
/// spectrum through a triangular mel filterbank. The frame count is
/// reconciled to video_frames by truncation or last-frame repetition.
/// A waveform shorter than half the video duration is rejected.
MelSpectrogram compute_logmel(const std::vector<double>& waveform, int sample_rate,
                              double video_frame_rate, int video_frames);

/// Per-recording standardization (zero mean, unit variance over all cells);
/// a near-constant spectrogram is only centred.
MelSpectrogram standardize(const MelSpectrogram& m);

}  // namespace percog::ingest
