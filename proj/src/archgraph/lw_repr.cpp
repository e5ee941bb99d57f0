#include "percog/archgraph/lw_repr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace percog::archgraph {

using nas::ConfigError;
using nas::OpKind;

const char* lw_mode_name(LwMode m) { return m == LwMode::Top5 ? "top5" : "hist"; }

LwMode lw_mode_from_name(const std::string& name) {
  if (name == "top5") return LwMode::Top5;
  if (name == "hist") return LwMode::Histogram;
  throw ConfigError("unknown LW representation mode: " + name);
}

void require_weighted(OpKind op) {
  if (!nas::operation_table()[static_cast<std::size_t>(op)].has_weights)
    throw ConfigError(std::string("operation has no layer weights: ") + nas::op_name(op));
}

std::vector<double> extract_lw_top5(const Tensor& w) {
  if (w.rank() != 3) throw ConfigError("extract_lw_top5: expected a (K,Cin,Cout) tensor");
  int k = w.dim(0), cin = w.dim(1), cout = w.dim(2);
  int n_kernels = cin * cout;
  std::vector<double> l1(static_cast<std::size_t>(n_kernels), 0.0);
  for (int ci = 0; ci < cin; ++ci)
    for (int co = 0; co < cout; ++co) {
      double s = 0.0;
      for (int kk = 0; kk < k; ++kk) s += std::abs(w.at3(kk, ci, co));
      l1[static_cast<std::size_t>(ci * cout + co)] = s;
    }
  std::vector<int> idx(static_cast<std::size_t>(n_kernels));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return l1[static_cast<std::size_t>(a)] >
                                              l1[static_cast<std::size_t>(b)]; });
  std::vector<double> out(static_cast<std::size_t>(5 * k), 0.0);
  int take = std::min(5, n_kernels);
  for (int r = 0; r < take; ++r) {
    int kid = idx[static_cast<std::size_t>(r)];
    int ci = kid / cout, co = kid % cout;
    for (int kk = 0; kk < k; ++kk)
      out[static_cast<std::size_t>(r * k + kk)] = w.at3(kk, ci, co);
  }
  return out;
}

std::vector<double> extract_lw_hist(const Tensor& w, int bins) {
  if (w.rank() != 3) throw ConfigError("extract_lw_hist: expected a (K,Cin,Cout) tensor");
  if (bins < 2) throw ConfigError("extract_lw_hist: need at least 2 bins");
  int k = w.dim(0), cin = w.dim(1), cout = w.dim(2);
  int n_kernels = cin * cout;
  double wmax = 0.0;
  for (double x : w.v) wmax = std::max(wmax, std::abs(x));
  std::vector<double> out(static_cast<std::size_t>(k * bins), 0.0);
  if (wmax == 0.0) {
    for (int kk = 0; kk < k; ++kk)
      out[static_cast<std::size_t>(kk * bins + (bins - 1) / 2)] = 1.0;
    return out;
  }
  for (int kk = 0; kk < k; ++kk) {
    for (int ci = 0; ci < cin; ++ci)
      for (int co = 0; co < cout; ++co) {
        double x = w.at3(kk, ci, co);
        int b = static_cast<int>(std::floor((x + wmax) / (2.0 * wmax) * bins));
        b = std::clamp(b, 0, bins - 1);
        out[static_cast<std::size_t>(kk * bins + b)] += 1.0;
      }
    for (int b = 0; b < bins; ++b)
      out[static_cast<std::size_t>(kk * bins + b)] /= n_kernels;
  }
  return out;
}

int lw_op_dim(OpKind op, LwMode mode, int bins) {
  const auto& spec = nas::operation_table()[static_cast<std::size_t>(op)];
  if (!spec.has_weights) return 0;
  return mode == LwMode::Top5 ? 5 * spec.kernel_extent : spec.kernel_extent * bins;
}

int lw_total_dim(LwMode mode, int bins) {
  int d = 0;
  for (const auto& spec : nas::operation_table())
    if (spec.has_weights) d += lw_op_dim(spec.kind, mode, bins);
  return d;
}

}  // namespace percog::archgraph
