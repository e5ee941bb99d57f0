#pragma once

#include <utility>

#include "percog/autodiff.hpp"
#include "percog/nas/ops.hpp"

namespace percog::nas {

/// Windowed, outlier-clamped MSE minimised over candidate reaction delays
/// tau in 0..25. For each tau the prediction's 80 frames are compared with
/// ground-truth frames [tau, tau+80); each frame/landmark contributes
/// min(dx^2 + dy^2, epsilon). Ties in tau break toward the smaller delay.
struct AdaptiveLossConfig {
  double epsilon = 0.01;
  int candidates = 26;  // tau in 0..candidates-1
};

struct AdaptiveLossValue {
  double loss = 0.0;
  int tau = 0;
};

/// Value-only evaluation. pred: (80,68,2), gt: (105,68,2).
AdaptiveLossValue adaptive_loss_eval(const Tensor& pred, const Tensor& gt,
                                     const AdaptiveLossConfig& cfg);

/// Differentiable path for training: picks tau by scanning values, then
/// builds the clamped loss for that alignment. pred is the network output in
/// channel-major (136,80) layout; gt is (105,68,2).
std::pair<Var, int> adaptive_loss_var(const Var& pred, const Tensor& gt,
                                      const AdaptiveLossConfig& cfg);

}  // namespace percog::nas
