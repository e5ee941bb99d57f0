#pragma once

#include <vector>

#include "percog/autodiff.hpp"

namespace percog {

/// Adam bound to a fixed parameter list. State (m, v, t) is indexed by the
/// position in that list, so the list must not change between steps.
class Adam {
 public:
  Adam(std::vector<Var> params, double lr, double weight_decay = 0.0,
       double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void zero_grad();
  /// One update from the gradients currently stored on the parameters.
  void step();

  const std::vector<Var>& params() const { return params_; }
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  long step_count() const { return t_; }

 private:
  std::vector<Var> params_;
  std::vector<Tensor> m_, v_;
  double lr_, wd_, b1_, b2_, eps_;
  long t_ = 0;
};

}  // namespace percog
