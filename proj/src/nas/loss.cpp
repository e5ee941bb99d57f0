#include "percog/nas/loss.hpp"

#include <algorithm>
#include <cmath>

#include "percog/ingest/windows.hpp"
#include "percog/nas/network.hpp"

namespace percog::nas {

namespace {

void check_shapes(const Tensor& pred_lm, const Tensor& gt, const AdaptiveLossConfig& cfg) {
  if (pred_lm.rank() != 3 || pred_lm.dim(0) != ingest::kInputFrames ||
      pred_lm.dim(1) != 68 || pred_lm.dim(2) != 2)
    throw ConfigError("adaptive loss: prediction must be (80,68,2)");
  if (gt.rank() != 3 || gt.dim(1) != 68 || gt.dim(2) != 2)
    throw ConfigError("adaptive loss: ground truth must be (T,68,2)");
  if (cfg.epsilon <= 0.0) throw ConfigError("adaptive loss: epsilon must be positive");
  if (cfg.candidates < 1 ||
      gt.dim(0) < ingest::kInputFrames + cfg.candidates - 1)
    throw ConfigError("adaptive loss: ground truth shorter than the candidate range");
}

double loss_at_tau(const Tensor& pred_lm, const Tensor& gt, int tau, double eps) {
  double total = 0.0;
  for (int i = 0; i < ingest::kInputFrames; ++i)
    for (int j = 0; j < 68; ++j) {
      double dx = pred_lm.at3(i, j, 0) - gt.at3(i + tau, j, 0);
      double dy = pred_lm.at3(i, j, 1) - gt.at3(i + tau, j, 1);
      total += std::min(dx * dx + dy * dy, eps);
    }
  return total;
}

}  // namespace

AdaptiveLossValue adaptive_loss_eval(const Tensor& pred, const Tensor& gt,
                                     const AdaptiveLossConfig& cfg) {
  check_shapes(pred, gt, cfg);
  if (!all_finite(pred)) throw NumericalError("adaptive loss: non-finite prediction");
  AdaptiveLossValue best;
  best.loss = loss_at_tau(pred, gt, 0, cfg.epsilon);
  best.tau = 0;
  for (int tau = 1; tau < cfg.candidates; ++tau) {
    double l = loss_at_tau(pred, gt, tau, cfg.epsilon);
    if (l < best.loss) {
      best.loss = l;
      best.tau = tau;
    }
  }
  return best;
}

std::pair<Var, int> adaptive_loss_var(const Var& pred, const Tensor& gt,
                                      const AdaptiveLossConfig& cfg) {
  Tensor pred_lm = channels_to_landmarks(pred->val);
  AdaptiveLossValue v = adaptive_loss_eval(pred_lm, gt, cfg);
  // ground-truth slice [tau, tau+80) in the network's channel-major layout
  Tensor slice({136, ingest::kInputFrames});
  for (int i = 0; i < ingest::kInputFrames; ++i)
    for (int j = 0; j < 68; ++j)
      for (int c = 0; c < 2; ++c)
        slice.at2(2 * j + c, i) = gt.at3(i + v.tau, j, c);
  Var diff = sub(pred, make_const(std::move(slice)));
  Var per_landmark = pair_rows_sum(square(diff));     // (68,80): dx^2+dy^2
  Var loss = sum_all(clamp_upper(per_landmark, cfg.epsilon));
  return {loss, v.tau};
}

}  // namespace percog::nas
