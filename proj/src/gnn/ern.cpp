#include "percog/gnn/ern.hpp"

#include <cmath>
#include <set>

namespace percog::gnn {

using archgraph::CognitionGraph;
using nas::Cell;
using nas::ConfigError;

namespace {

Var xavier(int rows, int cols, Rng& rng) {
  Tensor w({rows, cols});
  double s = std::sqrt(2.0 / (rows + cols));
  for (auto& x : w.v) x = s * rng.gaussian();
  return make_param(std::move(w));
}

Var xavier3(int k, int cin, int cout, Rng& rng) {
  Tensor w({k, cin, cout});
  double s = std::sqrt(2.0 / (k * cin + cout));
  for (auto& x : w.v) x = s * rng.gaussian();
  return make_param(std::move(w));
}

// multi-head attention: queries from `q_src`, keys/values from `kv_src`,
// both (d,L); returns (d, L_q)
Var attend(const std::vector<Var>& wq, const std::vector<Var>& wk,
           const std::vector<Var>& wv, const Var& q_src, const Var& kv_src) {
  std::vector<Var> heads;
  for (std::size_t h = 0; h < wq.size(); ++h) {
    Var q = matmul(wq[h], q_src);   // (dh, Lq)
    Var k = matmul(wk[h], kv_src);  // (dh, Lk)
    Var v = matmul(wv[h], kv_src);  // (dh, Lk)
    double inv = 1.0 / std::sqrt(static_cast<double>(q->val.dim(0)));
    Var scores = scale(matmul(transpose2(q), k), inv);  // (Lq, Lk)
    Var att = softmax_rows(scores);
    heads.push_back(matmul(v, transpose2(att)));  // (dh, Lq)
  }
  return heads.size() == 1 ? heads.front() : concat_rows(heads);
}

Var concat_cols(const Var& a, const Var& b) {
  return transpose2(concat_rows({transpose2(a), transpose2(b)}));
}

}  // namespace

Var Ern::forward(const Var& v_a, const Var& v_b) const {
  if (v_a->val.numel() != dim || v_b->val.numel() != dim)
    throw ConfigError("ern: vertex feature dimension mismatch");
  Var fa = relu(conv1d(reshape(v_a, {1, dim}), conv_a, cfg.conv_stride, 1));
  Var fb = relu(conv1d(reshape(v_b, {1, dim}), conv_b, cfg.conv_stride, 1));
  Var fa_cross = attend(qa, ka, va, fb, fa);  // a's values, queried by b
  Var fb_cross = attend(qb, kb, vb, fa, fb);
  Var g = concat_cols(fa_cross, fb_cross);    // (d, 2L)
  Var g2 = attend(sq, sk, sv, g, g);
  Var g3 = relu(add_bias_rows(matmul(ff_w, g2), ff_b));
  Var u = reshape(matmul(pool_w, g3), {2 * seq});
  return linear(out_w, out_b, u);
}

std::vector<Var> Ern::params() const {
  std::vector<Var> out{conv_a, conv_b, ff_w, ff_b, pool_w, out_w, out_b};
  for (const auto& group : {qa, ka, va, qb, kb, vb, sq, sk, sv})
    out.insert(out.end(), group.begin(), group.end());
  return out;
}

Ern make_ern(int dim, const ErnConfig& cfg, Rng& rng) {
  if (cfg.d_model % cfg.heads != 0)
    throw ConfigError("ern: d_model must be divisible by the head count");
  Ern e;
  e.cfg = cfg;
  e.dim = dim;
  int pad = (cfg.kernel_extent - 1) / 2;
  e.seq = (dim + 2 * pad - cfg.kernel_extent) / cfg.conv_stride + 1;
  int dh = cfg.d_model / cfg.heads;
  e.conv_a = xavier3(cfg.kernel_extent, 1, cfg.d_model, rng);
  e.conv_b = xavier3(cfg.kernel_extent, 1, cfg.d_model, rng);
  for (int h = 0; h < cfg.heads; ++h) {
    e.qa.push_back(xavier(dh, cfg.d_model, rng));
    e.ka.push_back(xavier(dh, cfg.d_model, rng));
    e.va.push_back(xavier(dh, cfg.d_model, rng));
    e.qb.push_back(xavier(dh, cfg.d_model, rng));
    e.kb.push_back(xavier(dh, cfg.d_model, rng));
    e.vb.push_back(xavier(dh, cfg.d_model, rng));
    e.sq.push_back(xavier(dh, cfg.d_model, rng));
    e.sk.push_back(xavier(dh, cfg.d_model, rng));
    e.sv.push_back(xavier(dh, cfg.d_model, rng));
  }
  e.ff_w = xavier(cfg.d_model, cfg.d_model, rng);
  e.ff_b = make_param(Tensor({cfg.d_model}, 0.0));
  e.pool_w = xavier(1, cfg.d_model, rng);
  e.out_w = xavier(dim, 2 * e.seq, rng);
  e.out_b = make_param(Tensor({dim}, 0.0));
  return e;
}

const char* edge_mode_name(EdgeMode m) {
  switch (m) {
    case EdgeMode::Binary: return "binary";
    case EdgeMode::SingleErn: return "single_ern";
    case EdgeMode::MultiErn: return "multi_ern";
  }
  return "multi_ern";
}

EdgeMode edge_mode_from_name(const std::string& name) {
  if (name == "binary") return EdgeMode::Binary;
  if (name == "single_ern") return EdgeMode::SingleErn;
  if (name == "multi_ern") return EdgeMode::MultiErn;
  throw ConfigError("unknown edge mode: " + name +
                    " (expected binary|single_ern|multi_ern)");
}

std::string ErnBank::key(nas::ModuleTag module, nas::CellKind kind, int position) {
  std::string pos = position == kBoundary ? "boundary" : std::to_string(position);
  return std::string(nas::module_name(module)) + "/" + nas::cell_kind_name(kind) + "/" + pos;
}

const Ern& ErnBank::at(const std::string& k) const {
  auto it = erns.find(k);
  if (it == erns.end())
    throw ConfigError("ern bank: no network for position " + k);
  return it->second;
}

std::vector<Var> ErnBank::params() const {
  std::vector<Var> out;
  for (const auto& [k, e] : erns) {
    auto p = e.params();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<std::pair<int, int>> cell_adjacent_pairs(int n_nodes) {
  auto edges = Cell::edge_pairs(n_nodes);
  std::vector<std::pair<int, int>> out;
  for (std::size_t x = 0; x < edges.size(); ++x)
    for (std::size_t y = x + 1; y < edges.size(); ++y) {
      auto [i1, j1] = edges[x];
      auto [i2, j2] = edges[y];
      if (i1 == i2 || i1 == j2 || j1 == i2 || j1 == j2)
        out.emplace_back(static_cast<int>(x), static_cast<int>(y));
    }
  return out;
}

int pair_position(int n_nodes, int e1, int e2) {
  if (e1 > e2) std::swap(e1, e2);
  auto pairs = cell_adjacent_pairs(n_nodes);
  for (std::size_t p = 0; p < pairs.size(); ++p)
    if (pairs[p].first == e1 && pairs[p].second == e2) return static_cast<int>(p);
  return -2;  // not a within-cell adjacent pair
}

namespace {

int edge_index_in_cell(const archgraph::VertexRecord& r, int n_nodes) {
  auto pairs = Cell::edge_pairs(n_nodes);
  for (std::size_t e = 0; e < pairs.size(); ++e)
    if (pairs[e].first == r.edge_i && pairs[e].second == r.edge_j)
      return static_cast<int>(e);
  throw ConfigError("graph vertex references an unknown cell edge");
}

int infer_n_nodes(const CognitionGraph& g) {
  int max_j = 1;
  for (const auto& r : g.vertices) max_j = std::max(max_j, r.edge_j);
  return max_j - 1;
}

std::string pair_key(const CognitionGraph& g, int n_nodes, int u, int v) {
  const auto& ru = g.vertices[static_cast<std::size_t>(u)];
  const auto& rv = g.vertices[static_cast<std::size_t>(v)];
  bool same_cell = ru.module == rv.module && ru.block_index == rv.block_index &&
                   ru.cell_index == rv.cell_index;
  if (!same_cell) return ErnBank::key(ru.module, ru.block_kind, ErnBank::kBoundary);
  int pos = pair_position(n_nodes, edge_index_in_cell(ru, n_nodes),
                          edge_index_in_cell(rv, n_nodes));
  if (pos < 0)
    throw ConfigError("adjacent vertices do not form a known within-cell pair");
  return ErnBank::key(ru.module, ru.block_kind, pos);
}

}  // namespace

ErnBank make_ern_bank(const CognitionGraph& g, int vertex_dim, EdgeMode mode,
                      const ErnConfig& cfg, Rng& rng) {
  ErnBank bank;
  bank.mode = mode;
  bank.cfg = cfg;
  bank.dim = vertex_dim;
  if (mode == EdgeMode::Binary) return bank;
  if (mode == EdgeMode::SingleErn) {
    bank.erns.emplace("shared", make_ern(vertex_dim, cfg, rng));
    return bank;
  }
  int n_nodes = infer_n_nodes(g);
  // collect keys first so creation order (and the RNG stream) is canonical
  std::set<std::string> keys;
  for (const auto& [u, v] : g.adjacency) keys.insert(pair_key(g, n_nodes, u, v));
  for (const auto& k : keys) bank.erns.emplace(k, make_ern(vertex_dim, cfg, rng));
  return bank;
}

std::map<std::pair<int, int>, Var> encode_all_edges(const CognitionGraph& g,
                                                    const std::vector<Var>& vertex_features,
                                                    const ErnBank& bank) {
  if (vertex_features.size() != g.vertices.size())
    throw ConfigError("encode_all_edges: vertex feature count mismatch");
  std::map<std::pair<int, int>, Var> out;
  int n_nodes = g.vertices.empty() ? 1 : infer_n_nodes(g);
  for (const auto& [u, v] : g.adjacency) {
    Var feat;
    if (bank.mode == EdgeMode::Binary) {
      feat = make_const(Tensor::vec({1.0}));
    } else {
      const Ern& ern = bank.mode == EdgeMode::SingleErn
                           ? bank.at("shared")
                           : bank.at(pair_key(g, n_nodes, u, v));
      feat = ern.forward(vertex_features[static_cast<std::size_t>(u)],
                         vertex_features[static_cast<std::size_t>(v)]);
    }
    out.emplace(std::make_pair(u, v), feat);
  }
  return out;
}

}  // namespace percog::gnn
