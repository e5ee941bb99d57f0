#include "percog/gnn/ven.hpp"

#include <cmath>
#include <stdexcept>

namespace percog::gnn {

namespace {

Var init_linear(int rows, int cols, Rng& rng) {
  Tensor w({rows, cols});
  double s = std::sqrt(2.0 / cols);
  for (auto& x : w.v) x = s * rng.gaussian();
  return make_param(std::move(w));
}

}  // namespace

Var Ven::forward(const Var& alpha_w) const {
  if (alpha_w->val.numel() != w1->val.dim(1))
    throw std::invalid_argument("ven: input dimension mismatch");
  Var h = relu(linear(w1, b1, alpha_w));
  h = relu(linear(w2, b2, h));
  return linear(w3, b3, h);
}

Ven make_ven(int out_dim, Rng& rng, int hidden) {
  Ven v;
  v.out_dim = out_dim;
  v.w1 = init_linear(hidden, 5, rng);
  v.b1 = make_param(Tensor({hidden}, 0.0));
  v.w2 = init_linear(hidden, hidden, rng);
  v.b2 = make_param(Tensor({hidden}, 0.0));
  v.w3 = init_linear(out_dim, hidden, rng);
  v.b3 = make_param(Tensor({out_dim}, 0.0));
  return v;
}

}  // namespace percog::gnn
