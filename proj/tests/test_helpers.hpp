#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "percog/autodiff.hpp"
#include "percog/rng.hpp"

namespace percog::testing {

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& x : t.v) x = scale * rng.gaussian();
  return t;
}

/// Central-difference check of every (sampled) parameter coordinate against
/// the analytic gradient of the scalar rebuilt by make_loss().
inline void check_gradients(const std::vector<Var>& params,
                            const std::function<Var()>& make_loss, double rel_tol = 1e-5,
                            int max_coords_per_param = 24, std::uint64_t seed = 42,
                            double h_base = 1e-5) {
  for (const auto& p : params) p->zero_grad();
  Var loss = make_loss();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  for (const auto& p : params) {
    p->ensure_grad();
    analytic.push_back(p->grad.v);
  }
  Rng rng(seed);
  int checked = 0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Node& p = *params[pi];
    int n = p.val.numel();
    std::vector<int> coords;
    if (n <= max_coords_per_param) {
      for (int i = 0; i < n; ++i) coords.push_back(i);
    } else {
      for (int c = 0; c < max_coords_per_param; ++c)
        coords.push_back(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n))));
    }
    for (int i : coords) {
      double v0 = p.val[i];
      double h = h_base * std::max(1.0, std::abs(v0));
      p.val[i] = v0 + h;
      double lp = value(make_loss());
      p.val[i] = v0 - h;
      double lm = value(make_loss());
      p.val[i] = v0;
      double fd = (lp - lm) / (2.0 * h);
      double an = analytic[pi][static_cast<std::size_t>(i)];
      double denom = std::max({std::abs(fd), std::abs(an), 1e-7});
      INFO("param ", pi, " coord ", i, " fd=", fd, " analytic=", an);
      CHECK(std::abs(fd - an) / denom < rel_tol);
      ++checked;
    }
  }
  CHECK(checked > 0);
}

}  // namespace percog::testing
