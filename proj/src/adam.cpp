#include "percog/adam.hpp"

#include <cmath>

namespace percog {

Adam::Adam(std::vector<Var> params, double lr, double weight_decay,
           double beta1, double beta2, double eps)
    : params_(std::move(params)),
      lr_(lr),
      wd_(weight_decay),
      b1_(beta1),
      b2_(beta2),
      eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p->val.shape, 0.0);
    v_.emplace_back(p->val.shape, 0.0);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

void Adam::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Node& p = *params_[i];
    p.ensure_grad();
    for (int j = 0; j < p.val.numel(); ++j) {
      double g = p.grad[j] + wd_ * p.val[j];
      double& m = m_[i][j];
      double& v = v_[i][j];
      m = b1_ * m + (1.0 - b1_) * g;
      v = b2_ * v + (1.0 - b2_) * g * g;
      double mhat = m / bc1;
      double vhat = v / bc2;
      p.val[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace percog
