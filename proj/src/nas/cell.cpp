#include "percog/nas/cell.hpp"

#include <cmath>

namespace percog::nas {

EdgeRole edge_role(CellKind kind, int from_node) {
  if (from_node >= 2) return EdgeRole::Regular;
  switch (kind) {
    case CellKind::Down: return EdgeRole::Down;
    case CellKind::Up: return EdgeRole::Up;
    default: return EdgeRole::Regular;
  }
}

int MixedEdge::valid_count() const {
  int n = 0;
  for (char c : valid) n += c ? 1 : 0;
  return n;
}

Var MixedEdge::op_forward(OpKind k, const Var& x) const {
  const auto& spec = operation_table()[static_cast<std::size_t>(k)];
  switch (k) {
    case OpKind::MaxPool3: return maxpool1d(x, 3, stride);
    case OpKind::AvgPool3: return avgpool1d(x, 3, stride);
    case OpKind::SepConv3:
    case OpKind::SepConv5:
    case OpKind::DilConv3:
    case OpKind::DilConv5:
      return conv1d(x, weights[static_cast<std::size_t>(k)], stride, spec.dilation);
    case OpKind::TConv3: return tconv1d(x, weights[static_cast<std::size_t>(k)], stride);
    case OpKind::UpLinear: return upsample_linear2(x);
    case OpKind::UpNearest: return upsample_nearest2(x);
    case OpKind::Identity: return x;
  }
  throw ConfigError("op_forward: unknown operation");
}

Var MixedEdge::forward(const Var& x) const {
  std::vector<char> mask(valid.begin(), valid.end());
  Var mix = softmax_masked(alphas, mask);
  Var acc;
  for (int k = 0; k < kNumOps; ++k) {
    if (!valid[static_cast<std::size_t>(k)]) continue;
    Var term = scale_by(op_forward(static_cast<OpKind>(k), x), mix, k);
    acc = acc ? add(acc, term) : term;
  }
  if (!acc) throw ConfigError("mixed edge with every operation masked out");
  return acc;
}

std::vector<std::pair<int, int>> Cell::edge_pairs(int n_nodes) {
  std::vector<std::pair<int, int>> pairs;
  for (int j = 2; j < 2 + n_nodes; ++j)
    for (int i = 0; i < j; ++i) pairs.emplace_back(i, j);
  return pairs;
}

Cell::Out Cell::forward(const Var& prev_prev, const Var& prev) const {
  if (prev_prev->val.shape != prev->val.shape)
    throw ConfigError("cell: input shape mismatch");
  std::vector<Var> nodes{prev_prev, prev};
  nodes.reserve(static_cast<std::size_t>(2 + n_nodes));
  std::size_t e = 0;
  for (int j = 2; j < 2 + n_nodes; ++j) {
    Var acc;
    for (int i = 0; i < j; ++i, ++e) {
      Var term = edges[e].forward(nodes[static_cast<std::size_t>(i)]);
      acc = acc ? add(acc, term) : term;
    }
    nodes.push_back(acc);
  }
  std::vector<Var> inter(nodes.begin() + 2, nodes.end());
  Var cat = inter.size() == 1 ? inter.front() : concat_rows(inter);
  Out out;
  out.next = conv1d(relu(cat), out_proj, 1, 1);
  out.contribution = conv1d(out.next, contrib_proj, 1, 1);
  return out;
}

Cell make_cell(CellKind kind, int n_nodes, int channels, const ValidityTable& validity,
               Rng& rng, const std::vector<Var>& shared_alphas) {
  Cell cell;
  cell.kind = kind;
  cell.n_nodes = n_nodes;
  cell.channels = channels;
  auto pairs = Cell::edge_pairs(n_nodes);
  cell.edges.reserve(pairs.size());
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    MixedEdge edge;
    edge.i = pairs[e].first;
    edge.j = pairs[e].second;
    edge.role = edge_role(kind, edge.i);
    edge.channels = channels;
    edge.stride = edge.role == EdgeRole::Regular ? 1 : 2;
    edge.valid = validity.for_role(edge.role);
    if (!shared_alphas.empty()) {
      edge.alphas = shared_alphas[e];
    } else {
      edge.alphas = make_param(Tensor({kNumOps}, 0.0));
    }
    for (int k = 0; k < kNumOps; ++k) {
      const auto& spec = operation_table()[static_cast<std::size_t>(k)];
      if (!spec.has_weights || !edge.valid[static_cast<std::size_t>(k)]) continue;
      Tensor w({spec.kernel_extent, channels, channels});
      double s = std::sqrt(2.0 / (spec.kernel_extent * channels));
      for (auto& x : w.v) x = s * rng.gaussian();
      edge.weights[static_cast<std::size_t>(k)] = make_param(std::move(w));
    }
    cell.edges.push_back(std::move(edge));
  }
  Tensor wp({1, n_nodes * channels, channels});
  double sp = std::sqrt(2.0 / (n_nodes * channels));
  for (auto& x : wp.v) x = sp * rng.gaussian();
  cell.out_proj = make_param(std::move(wp));
  Tensor wc({1, channels, channels});
  double sc = std::sqrt(2.0 / channels);
  for (auto& x : wc.v) x = sc * rng.gaussian();
  cell.contrib_proj = make_param(std::move(wc));
  return cell;
}

}  // namespace percog::nas
