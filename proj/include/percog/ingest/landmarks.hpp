#pragma once

#include <stdexcept>
#include <vector>

#include "percog/tensor.hpp"

namespace percog::ingest {

struct IngestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 68-point reference shape with centroid exactly at (0.5, 0.5). Fixed for a
/// whole experiment.
struct MeanFaceTemplate {
  Tensor points;  // (68,2)
  static const MeanFaceTemplate& standard();
};

struct LandmarkSequence {
  Tensor points;  // (T,68,2), normalized coordinates in [0,1]
  double frame_rate = 25.0;
  int frames() const { return points.dim(0); }
};

struct NormalizeResult {
  LandmarkSequence seq;
  std::vector<int> interpolated_frames;  // degenerate frames filled from neighbours
};

/// Aligns each frame to the template with the least-squares similarity
/// transform (rotation + uniform scale + translation). Degenerate frames
/// (all points identical or collinear) are linearly interpolated from the
/// nearest valid neighbours; a clip with no valid frame is rejected.
NormalizeResult normalize_landmarks(const Tensor& raw, const MeanFaceTemplate& tpl,
                                    double frame_rate = 25.0);

}  // namespace percog::ingest
