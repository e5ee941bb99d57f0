#pragma once

// Straight-line re-implementation of the whole network forward pass on raw
// double buffers, written against the documented architecture rather than
// the autodiff path. Used to cross-check CognitiveNet::forward on small
// configurations.

#include <cmath>
#include <vector>

#include "percog/nas/network.hpp"

namespace percog::testing {

struct Map {
  int c = 0, t = 0;
  std::vector<double> v;
  Map() = default;
  Map(int c_, int t_) : c(c_), t(t_), v(static_cast<std::size_t>(c_ * t_), 0.0) {}
  double& at(int ci, int ti) { return v[static_cast<std::size_t>(ci * t + ti)]; }
  double at(int ci, int ti) const { return v[static_cast<std::size_t>(ci * t + ti)]; }
};

inline Map o_conv(const Map& x, const Tensor& w, int stride, int dil) {
  int k = w.dim(0), cin = w.dim(1), cout = w.dim(2);
  int pad = ((k - 1) * dil) / 2;
  int span = (k - 1) * dil + 1;
  Map y(cout, (x.t + 2 * pad - span) / stride + 1);
  for (int tp = 0; tp < y.t; ++tp)
    for (int co = 0; co < cout; ++co) {
      double s = 0.0;
      for (int kk = 0; kk < k; ++kk) {
        int xi = tp * stride + kk * dil - pad;
        if (xi < 0 || xi >= x.t) continue;
        for (int ci = 0; ci < cin; ++ci) s += w.at3(kk, ci, co) * x.at(ci, xi);
      }
      y.at(co, tp) = s;
    }
  return y;
}

inline Map o_tconv(const Map& x, const Tensor& w, int stride) {
  int k = w.dim(0), cin = w.dim(1), cout = w.dim(2);
  Map y(cout, x.t * stride);
  for (int tp = 0; tp < x.t; ++tp)
    for (int kk = 0; kk < k; ++kk) {
      int oi = tp * stride + kk - 1;
      if (oi < 0 || oi >= y.t) continue;
      for (int ci = 0; ci < cin; ++ci)
        for (int co = 0; co < cout; ++co)
          y.at(co, oi) += w.at3(kk, ci, co) * x.at(ci, tp);
    }
  return y;
}

inline Map o_pool(const Map& x, int k, int stride, bool max) {
  int pad = (k - 1) / 2;
  Map y(x.c, (x.t + 2 * pad - k) / stride + 1);
  for (int ci = 0; ci < x.c; ++ci)
    for (int tp = 0; tp < y.t; ++tp) {
      double best = -1e300, sum = 0.0;
      int cnt = 0;
      for (int kk = 0; kk < k; ++kk) {
        int xi = tp * stride + kk - pad;
        if (xi < 0 || xi >= x.t) continue;
        best = std::max(best, x.at(ci, xi));
        sum += x.at(ci, xi);
        ++cnt;
      }
      y.at(ci, tp) = max ? best : sum / cnt;
    }
  return y;
}

inline Map o_up(const Map& x, bool linear) {
  Map y(x.c, 2 * x.t);
  for (int ci = 0; ci < x.c; ++ci)
    for (int tp = 0; tp < x.t; ++tp) {
      double v = x.at(ci, tp);
      double nxt = x.at(ci, std::min(tp + 1, x.t - 1));
      y.at(ci, 2 * tp) = v;
      y.at(ci, 2 * tp + 1) = linear ? 0.5 * (v + nxt) : v;
    }
  return y;
}

inline Map o_edge(const nas::MixedEdge& e, const Map& x) {
  // softmax over the valid alphas
  double mx = -1e300, z = 0.0;
  std::vector<double> mix(nas::kNumOps, 0.0);
  for (int k = 0; k < nas::kNumOps; ++k)
    if (e.valid[static_cast<std::size_t>(k)]) mx = std::max(mx, e.alphas->val[k]);
  for (int k = 0; k < nas::kNumOps; ++k)
    if (e.valid[static_cast<std::size_t>(k)]) {
      mix[static_cast<std::size_t>(k)] = std::exp(e.alphas->val[k] - mx);
      z += mix[static_cast<std::size_t>(k)];
    }
  for (auto& m : mix) m /= z;

  Map acc;
  bool first = true;
  for (int k = 0; k < nas::kNumOps; ++k) {
    if (!e.valid[static_cast<std::size_t>(k)]) continue;
    Map o;
    switch (static_cast<nas::OpKind>(k)) {
      case nas::OpKind::MaxPool3: o = o_pool(x, 3, e.stride, true); break;
      case nas::OpKind::AvgPool3: o = o_pool(x, 3, e.stride, false); break;
      case nas::OpKind::SepConv3:
      case nas::OpKind::SepConv5:
        o = o_conv(x, e.weights[static_cast<std::size_t>(k)]->val, e.stride, 1);
        break;
      case nas::OpKind::DilConv3:
      case nas::OpKind::DilConv5:
        o = o_conv(x, e.weights[static_cast<std::size_t>(k)]->val, e.stride, 2);
        break;
      case nas::OpKind::TConv3:
        o = o_tconv(x, e.weights[static_cast<std::size_t>(k)]->val, e.stride);
        break;
      case nas::OpKind::UpLinear: o = o_up(x, true); break;
      case nas::OpKind::UpNearest: o = o_up(x, false); break;
      case nas::OpKind::Identity: o = x; break;
    }
    if (first) {
      acc = Map(o.c, o.t);
      first = false;
    }
    for (std::size_t i = 0; i < o.v.size(); ++i)
      acc.v[i] += mix[static_cast<std::size_t>(k)] * o.v[i];
  }
  return acc;
}

struct CellOut {
  Map next, contribution;
};

inline CellOut o_cell(const nas::Cell& cell, const Map& pp, const Map& p) {
  std::vector<Map> nodes{pp, p};
  std::size_t ei = 0;
  for (int j = 2; j < 2 + cell.n_nodes; ++j) {
    Map acc;
    for (int i = 0; i < j; ++i, ++ei) {
      Map t = o_edge(cell.edges[ei], nodes[static_cast<std::size_t>(i)]);
      if (acc.v.empty()) acc = Map(t.c, t.t);
      for (std::size_t v = 0; v < t.v.size(); ++v) acc.v[v] += t.v[v];
    }
    nodes.push_back(acc);
  }
  Map cat(cell.n_nodes * cell.channels, nodes[2].t);
  for (int m = 0; m < cell.n_nodes; ++m)
    for (int c = 0; c < cell.channels; ++c)
      for (int t = 0; t < cat.t; ++t)
        cat.at(m * cell.channels + c, t) = nodes[static_cast<std::size_t>(2 + m)].at(c, t);
  for (auto& v : cat.v) v = std::max(0.0, v);
  CellOut out;
  out.next = o_conv(cat, cell.out_proj->val, 1, 1);
  out.contribution = o_conv(out.next, cell.contrib_proj->val, 1, 1);
  return out;
}

inline Map o_stack(const nas::Block& b, const Map& in_pp, const Map& in_p) {
  Map pp = in_pp, p = in_p, sum;
  for (int c = 0; c < b.active_depth; ++c) {
    CellOut out = o_cell(b.cells[static_cast<std::size_t>(c)], pp, p);
    if (sum.v.empty()) sum = Map(out.contribution.c, out.contribution.t);
    for (std::size_t i = 0; i < sum.v.size(); ++i) sum.v[i] += out.contribution.v[i];
    pp = p;
    p = out.next;
  }
  return sum;
}

inline Map o_block(const nas::Block& b, const Map& x) {
  Map h = b.input_proj ? o_conv(x, b.input_proj->val, 1, 1) : x;
  return o_stack(b, h, h);
}

inline Map o_align(Map x, int t_target) {
  while (x.t > t_target) x = o_pool(x, 2, 2, false);
  while (x.t < t_target) {
    Map y(x.c, 2 * x.t);
    for (int c = 0; c < x.c; ++c)
      for (int t = 0; t < x.t; ++t) {
        y.at(c, 2 * t) = x.at(c, t);
        y.at(c, 2 * t + 1) = x.at(c, t);
      }
    x = y;
  }
  return x;
}

inline Map o_concat(const std::vector<Map>& parts) {
  int c = 0;
  for (const auto& p : parts) c += p.c;
  Map y(c, parts.front().t);
  int off = 0;
  for (const auto& p : parts) {
    for (int ci = 0; ci < p.c; ++ci)
      for (int t = 0; t < p.t; ++t) y.at(off + ci, t) = p.at(ci, t);
    off += p.c;
  }
  return y;
}

inline Map o_lstm(const nas::Lstm& lstm, const Map& x) {
  Map seq = x;
  int hdim = lstm.hidden;
  for (int l = 0; l < lstm.layers; ++l) {
    const auto& lp = lstm.ls[static_cast<std::size_t>(l)];
    std::vector<double> h(static_cast<std::size_t>(hdim), 0.0),
        c(static_cast<std::size_t>(hdim), 0.0);
    Map out(hdim, seq.t);
    for (int t = 0; t < seq.t; ++t) {
      std::vector<double> zin;
      for (int ci = 0; ci < seq.c; ++ci) zin.push_back(seq.at(ci, t));
      zin.insert(zin.end(), h.begin(), h.end());
      auto gate = [&](int row) {
        double s = lp.b->val[row];
        for (std::size_t j = 0; j < zin.size(); ++j)
          s += lp.w->val.at2(row, static_cast<int>(j)) * zin[j];
        return s;
      };
      for (int r = 0; r < hdim; ++r) {
        double ig = 1.0 / (1.0 + std::exp(-gate(r)));
        double fg = 1.0 / (1.0 + std::exp(-gate(hdim + r)));
        double gg = std::tanh(gate(2 * hdim + r));
        double og = 1.0 / (1.0 + std::exp(-gate(3 * hdim + r)));
        c[static_cast<std::size_t>(r)] = fg * c[static_cast<std::size_t>(r)] + ig * gg;
        h[static_cast<std::size_t>(r)] = og * std::tanh(c[static_cast<std::size_t>(r)]);
        out.at(r, t) = h[static_cast<std::size_t>(r)];
      }
    }
    seq = out;
  }
  return seq;
}

/// Whole-network oracle (audio+face modality).
inline Tensor oracle_forward(const nas::CognitiveNet& net, const Tensor& audio,
                             const Tensor& lm) {
  Map vl(136, 80), va(64, 80);
  for (int t = 0; t < 80; ++t) {
    for (int j = 0; j < 68; ++j)
      for (int c = 0; c < 2; ++c) vl.at(2 * j + c, t) = lm.at3(t, j, c);
    for (int b = 0; b < 64; ++b) va.at(b, t) = audio.at2(t, b);
  }
  auto stem = [&](const Map& x, const Var& w, const Var& b) {
    Map y = o_conv(x, w->val, 1, 1);
    for (int ci = 0; ci < y.c; ++ci)
      for (int t = 0; t < y.t; ++t) y.at(ci, t) = std::max(0.0, y.at(ci, t) + b->val[ci]);
    return y;
  };
  Map v = stem(vl, net.vis_stem_w, net.vis_stem_b);
  std::vector<Map> vis_taps;
  for (int bi : net.vis_idx) {
    v = o_block(net.blocks[static_cast<std::size_t>(bi)], v);
    vis_taps.push_back(v);
  }
  Map a = stem(va, net.aud_stem_w, net.aud_stem_b);
  std::vector<Map> aud_taps;
  for (int bi : net.aud_idx) {
    a = o_block(net.blocks[static_cast<std::size_t>(bi)], a);
    aud_taps.push_back(a);
  }
  Map f_prev, f_prev2;
  for (std::size_t n = 0; n < net.fus_idx.size(); ++n) {
    const auto& fb = net.blocks[static_cast<std::size_t>(net.fus_idx[n])];
    const auto& w = net.fusion_wiring[n];
    int t_n = vis_taps[n].t;
    Map in_p = o_conv(o_concat({vis_taps[n], aud_taps[n]}), w.proj_va->val, 1, 1);
    Map in_pp;
    if (n == 0)
      in_pp = in_p;
    else if (n == 1)
      in_pp = o_conv(o_align(f_prev, t_n), w.proj_ff->val, 1, 1);
    else
      in_pp = o_conv(o_concat({o_align(f_prev, t_n), o_align(f_prev2, t_n)}),
                     w.proj_ff->val, 1, 1);
    Map f_out = o_stack(fb, in_pp, in_p);
    f_prev2 = f_prev;
    f_prev = f_out;
  }
  Map mem = o_conv(o_concat({v, a, f_prev}), net.mem_in_w->val, 1, 1);
  Map hseq = o_lstm(net.lstm, mem);
  Map h = o_conv(hseq, net.mem_out_w->val, 1, 1);
  for (int bi : net.dec_idx) h = o_block(net.blocks[static_cast<std::size_t>(bi)], h);
  Map out = o_conv(h, net.head_w->val, 1, 1);
  Tensor pred({80, 68, 2});
  for (int t = 0; t < 80; ++t)
    for (int j = 0; j < 68; ++j)
      for (int c = 0; c < 2; ++c)
        pred.at3(t, j, c) = out.at(2 * j + c, t) + net.head_b->val[2 * j + c];
  return pred;
}

}  // namespace percog::testing
