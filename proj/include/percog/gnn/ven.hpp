#pragma once

#include "percog/autodiff.hpp"

namespace percog::gnn {

/// Vertices-feature encoding network: one MLP shared by every vertex of an
/// experiment. It maps the 5 weighted-operation alphas to a weighting vector
/// of the LW-representation dimension (two hidden layers of 60 rectified
/// units).
struct Ven {
  int out_dim = 0;
  Var w1, b1;  // (60,5), (60)
  Var w2, b2;  // (60,60), (60)
  Var w3, b3;  // (out,60), (out)

  Var forward(const Var& alpha_w) const;
  std::vector<Var> params() const { return {w1, b1, w2, b2, w3, b3}; }
};

Ven make_ven(int out_dim, Rng& rng, int hidden = 60);

}  // namespace percog::gnn
