#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "percog/nas/network.hpp"

namespace percog::nas {

struct CurvePoint {
  int epoch = 0;
  double loss = 0.0;
  int modal_tau = 0;
};

struct CheckpointMeta {
  std::string subject_id;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string alignment = "none";  // none | block_max
  bool encoding_only = false;      // aligned checkpoints are for encoding, not re-execution
  std::vector<CurvePoint> curve;
};

/// Versioned JSON container: spec, per-edge alphas, per-operation weight
/// tensors, per-block active depth, seed and provenance. Written atomically
/// (temp file + rename); the serialized form is deterministic, and the
/// content hash of the payload is embedded.
void save_checkpoint(const std::string& path, const CognitiveNet& net,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
  CognitiveNet net;
  CheckpointMeta meta;
};

/// Rebuilds the network from a checkpoint. Refuses encoding-only artifacts
/// unless allow_encoding_only is set. A malformed block payload raises an
/// error naming the block.
LoadedCheckpoint load_checkpoint(const std::string& path,
                                 bool allow_encoding_only = false);

}  // namespace percog::nas
