#include "percog/ingest/windows.hpp"

#include "percog/ingest/landmarks.hpp"  // IngestError

namespace percog::ingest {

WindowingResult window_dyad(const Tensor& speaker_audio, const Tensor& speaker_lm,
                            const Tensor& listener_lm, int start, int stride) {
  if (speaker_audio.rank() != 2 || speaker_audio.dim(1) != 64)
    throw IngestError("window_dyad: speaker audio must be (T,64)");
  if (speaker_lm.rank() != 3 || speaker_lm.dim(1) != 68 || speaker_lm.dim(2) != 2)
    throw IngestError("window_dyad: speaker landmarks must be (T,68,2)");
  if (listener_lm.rank() != 3 || listener_lm.dim(1) != 68 || listener_lm.dim(2) != 2)
    throw IngestError("window_dyad: listener landmarks must be (T,68,2)");
  int t = speaker_audio.dim(0);
  if (speaker_lm.dim(0) != t || listener_lm.dim(0) != t)
    throw IngestError("window_dyad: stream lengths differ");
  if (start < 0 || stride <= 0) throw IngestError("window_dyad: bad start/stride");

  WindowingResult res;
  if (t < kCandidateFrames) {
    res.too_short = true;
    return res;
  }
  for (int s = start; s + kCandidateFrames <= t; s += stride) {
    DyadWindow w;
    w.start_frame = s;
    w.speaker_audio = Tensor({kInputFrames, 64});
    for (int i = 0; i < kInputFrames; ++i)
      for (int b = 0; b < 64; ++b)
        w.speaker_audio.at2(i, b) = speaker_audio.at2(s + i, b);
    w.speaker_landmarks = Tensor({kInputFrames, 68, 2});
    for (int i = 0; i < kInputFrames; ++i)
      for (int j = 0; j < 136; ++j)
        w.speaker_landmarks.v[static_cast<std::size_t>(i) * 136 + j] =
            speaker_lm.v[static_cast<std::size_t>(s + i) * 136 + j];
    w.listener_gt = Tensor({kCandidateFrames, 68, 2});
    for (int i = 0; i < kCandidateFrames; ++i)
      for (int j = 0; j < 136; ++j)
        w.listener_gt.v[static_cast<std::size_t>(i) * 136 + j] =
            listener_lm.v[static_cast<std::size_t>(s + i) * 136 + j];
    res.windows.push_back(std::move(w));
  }
  return res;
}

}  // namespace percog::ingest
