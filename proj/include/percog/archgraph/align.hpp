#pragma once

#include <string>

#include "percog/nas/search.hpp"

namespace percog::archgraph {

/// Pads every regular block to its full cell count: each padded cell's edges
/// get alpha one-hot on identity and zeroed layer weights. The result is for
/// graph encoding only (padding changes what the network would compute), so
/// the emitted checkpoint is marked encoding-only.
void apply_block_maximization(nas::CognitiveNet& net, nas::CheckpointMeta& meta);

/// File-level wrapper: reads a searched checkpoint, writes the maximized one.
void align_block_max_file(const std::string& in_path, const std::string& out_path);

struct DistillConfig {
  int target_depth = 0;  // 0 -> the full cell count
  int epoch_cap = 150;
  int batch_size = 8;
  double lr = 0.001;
  double feature_weight = 1.0;  // weight of the per-block feature regression
  double tolerance = 0.10;      // distilled loss must be within 10% of the teacher's
  nas::AdaptiveLossConfig loss;
  std::uint64_t seed = 1;
};

struct DistillResult {
  bool conforming = false;
  double teacher_loss = 0.0;
  double student_loss = 0.0;
  int epochs_run = 0;
  std::string checkpoint_path;
};

/// Re-trains the searched network into fixed-depth regular blocks. The
/// student starts from the teacher's parameters, minimises the adaptive loss
/// plus a per-regular-block feature regression against the teacher's block
/// outputs, and stops once its adaptive loss is within tolerance of the
/// teacher's. Failing the bound within the epoch cap emits a best-effort
/// checkpoint flagged non-conforming.
DistillResult align_block_distill(const std::string& ckpt_path,
                                  const nas::SubjectWindows& windows,
                                  const DistillConfig& cfg, const std::string& out_path);

}  // namespace percog::archgraph
