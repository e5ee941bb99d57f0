#include "percog/archgraph/align.hpp"

#include <cmath>
#include <iostream>

#include "percog/hash.hpp"

namespace percog::archgraph {

using nas::CognitiveNet;
using nas::ConfigError;

void apply_block_maximization(nas::CognitiveNet& net, nas::CheckpointMeta& meta) {
  for (auto& b : net.blocks) {
    int full = static_cast<int>(b.cells.size());
    for (int c = b.active_depth; c < full; ++c) {
      auto& cell = b.cells[static_cast<std::size_t>(c)];
      for (auto& e : cell.edges) {
        Tensor a({nas::kNumOps}, 0.0);
        a[static_cast<int>(nas::OpKind::Identity)] = 1.0;
        e.alphas = make_param(std::move(a));  // detached: never shared with live cells
        for (auto& w : e.weights)
          if (w) w->val.fill(0.0);
      }
    }
    b.active_depth = full;
  }
  meta.alignment = "block_max";
  meta.encoding_only = true;
}

void align_block_max_file(const std::string& in_path, const std::string& out_path) {
  auto loaded = nas::load_checkpoint(in_path);
  apply_block_maximization(loaded.net, loaded.meta);
  nas::save_checkpoint(out_path, loaded.net, loaded.meta);
}

namespace {

double mean_adaptive_loss(const CognitiveNet& net,
                          const std::vector<const ingest::DyadWindow*>& windows,
                          const nas::AdaptiveLossConfig& cfg) {
  double total = 0.0;
  for (const auto* w : windows) {
    Tensor pred = net.predict(w->speaker_audio, w->speaker_landmarks);
    total += nas::adaptive_loss_eval(pred, w->listener_gt, cfg).loss;
  }
  return total / static_cast<double>(windows.size());
}

}  // namespace

DistillResult align_block_distill(const std::string& ckpt_path,
                                  const nas::SubjectWindows& windows,
                                  const DistillConfig& cfg, const std::string& out_path) {
  if (windows.windows.empty())
    throw ConfigError("align_block_distill: no training windows for the subject");
  auto teacher = nas::load_checkpoint(ckpt_path);
  // the student is an independent deep copy initialised from the teacher
  auto student = nas::load_checkpoint(ckpt_path);

  int target = cfg.target_depth;
  for (auto& b : student.net.blocks) {
    if (!b.depth_searchable) continue;
    int full = static_cast<int>(b.cells.size());
    int d = target <= 0 ? full : target;
    if (d > full)
      throw ConfigError("align_block_distill: target depth exceeds the block's cell count");
    b.active_depth = d;
  }

  std::vector<const ingest::DyadWindow*> ws;
  for (const auto& w : windows.windows) ws.push_back(&w);

  DistillResult res;
  res.teacher_loss = mean_adaptive_loss(teacher.net, ws, cfg.loss);
  double bound = (1.0 + cfg.tolerance) * res.teacher_loss;

  std::vector<Var> params = student.net.weight_params();
  {
    auto alphas = student.net.alpha_params();
    params.insert(params.end(), alphas.begin(), alphas.end());
  }
  Adam opt(params, cfg.lr);
  Rng shuffler = Rng(cfg.seed).derive("distill", fnv1a(windows.subject_id));

  res.student_loss = mean_adaptive_loss(student.net, ws, cfg.loss);
  for (int epoch = 0; epoch < cfg.epoch_cap && res.student_loss > bound; ++epoch) {
    std::vector<const ingest::DyadWindow*> order = ws;
    shuffler.shuffle(order);
    for (std::size_t off = 0; off < order.size();
         off += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end = std::min(order.size(), off + static_cast<std::size_t>(cfg.batch_size));
      opt.zero_grad();
      Var total;
      for (std::size_t i = off; i < end; ++i) {
        const auto* w = order[i];
        std::vector<Var> teacher_taps, student_taps;
        Var t_pred = teacher.net.forward(w->speaker_audio, w->speaker_landmarks, nullptr,
                                         -1, -1, &teacher_taps);
        Var s_pred = student.net.forward(w->speaker_audio, w->speaker_landmarks, nullptr,
                                         -1, -1, &student_taps);
        auto [task, tau] = nas::adaptive_loss_var(s_pred, w->listener_gt, cfg.loss);
        (void)tau;
        Var loss = task;
        for (std::size_t bi = 0; bi < student.net.blocks.size(); ++bi) {
          if (!student.net.blocks[bi].depth_searchable) continue;
          if (!teacher_taps[bi] || !student_taps[bi]) continue;
          Var feat = mse(student_taps[bi], make_const(teacher_taps[bi]->val));
          loss = add(loss, scale(feat, cfg.feature_weight));
        }
        total = total ? add(total, loss) : loss;
      }
      backward(scale(total, 1.0 / static_cast<double>(end - off)));
      opt.step();
      opt.zero_grad();
    }
    ++res.epochs_run;
    res.student_loss = mean_adaptive_loss(student.net, ws, cfg.loss);
  }

  res.conforming = res.student_loss <= bound;
  if (!res.conforming)
    std::cerr << "[percog] distillation left " << windows.subject_id << " at "
              << res.student_loss << " vs teacher " << res.teacher_loss
              << " (best effort checkpoint emitted)\n";

  nas::CheckpointMeta meta = student.meta;
  meta.alignment = "distill";
  meta.encoding_only = false;  // a distilled network is executable
  nas::save_checkpoint(out_path, student.net, meta);
  res.checkpoint_path = out_path;
  return res;
}

}  // namespace percog::archgraph
