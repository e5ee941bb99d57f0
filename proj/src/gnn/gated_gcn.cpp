#include "percog/gnn/gated_gcn.hpp"

#include <cmath>

namespace percog::gnn {

using nas::ConfigError;

std::vector<int> gcn_layer_widths(VertexVariant variant, int d_in, int n_layers) {
  std::vector<int> w;
  w.push_back(d_in);
  if (variant == VertexVariant::Op) {
    const int rest[5] = {10, 10, 10, 5, 5};
    for (int i = 0; i < n_layers - 1; ++i) w.push_back(rest[std::min(i, 4)]);
  } else {
    for (int i = 0; i < n_layers - 1; ++i)
      w.push_back(std::max(1, d_in / (1 << (i + 1))));
  }
  return w;
}

namespace {

Var init_w(int rows, int cols, Rng& rng) {
  Tensor w({rows, cols});
  double s = std::sqrt(2.0 / cols);
  for (auto& x : w.v) x = s * rng.gaussian();
  return make_param(std::move(w));
}

}  // namespace

GcnModel make_gcn(VertexVariant variant, int d_in, int edge_d_in, int n_vertices,
                  const GcnConfig& cfg, Rng& rng) {
  GcnModel m;
  m.cfg = cfg;
  m.d_in = d_in;
  m.edge_d_in = edge_d_in;
  m.census = cfg.head == GcnConfig::Head::Concat ? n_vertices : -1;
  auto widths = gcn_layer_widths(variant, d_in, cfg.layers);
  int in_v = d_in, in_e = edge_d_in;
  for (int w : widths) {
    GcnLayer l;
    l.in = in_v;
    l.out = w;
    l.edge_in = in_e;
    l.u_w = init_w(w, in_v, rng);
    l.u_b = make_param(Tensor({w}, 0.0));
    l.v_w = init_w(w, in_v, rng);
    l.a_w = init_w(w, in_v, rng);
    l.b_w = init_w(w, in_v, rng);
    l.c_w = init_w(w, in_e, rng);
    l.e_b = make_param(Tensor({w}, 0.0));
    m.layers.push_back(std::move(l));
    in_v = w;
    in_e = w;
  }
  int head_in = cfg.head == GcnConfig::Head::Concat ? n_vertices * in_v : in_v;
  m.fc1_w = init_w(cfg.head_hidden, head_in, rng);
  m.fc1_b = make_param(Tensor({cfg.head_hidden}, 0.0));
  m.fc2_w = init_w(5, cfg.head_hidden, rng);
  m.fc2_b = make_param(Tensor({5}, 0.0));
  return m;
}

std::vector<Var> GcnModel::params() const {
  std::vector<Var> out;
  for (const auto& l : layers)
    for (const auto& v : {l.u_w, l.u_b, l.v_w, l.a_w, l.b_w, l.c_w, l.e_b})
      out.push_back(v);
  out.push_back(fc1_w);
  out.push_back(fc1_b);
  out.push_back(fc2_w);
  out.push_back(fc2_b);
  return out;
}

Var gcn_forward(const GcnModel& model, const archgraph::CognitionGraph& g,
                const std::vector<Var>& vertex_features,
                const std::map<std::pair<int, int>, Var>& edge_features,
                Rng* dropout_rng) {
  int n = static_cast<int>(g.vertices.size());
  if (static_cast<int>(vertex_features.size()) != n)
    throw ConfigError("gcn_forward: vertex feature count mismatch");
  if (model.census >= 0 && n != model.census)
    throw ConfigError("gcn_forward: graph census " + std::to_string(n) +
                      " does not match the model census " + std::to_string(model.census));

  // neighbour lists over the symmetric adjacency
  std::vector<std::vector<std::pair<int, std::pair<int, int>>>> nbrs(
      static_cast<std::size_t>(n));
  for (const auto& [u, v] : g.adjacency) {
    nbrs[static_cast<std::size_t>(u)].push_back({v, {u, v}});
    nbrs[static_cast<std::size_t>(v)].push_back({u, {u, v}});
  }

  std::vector<Var> h = vertex_features;
  std::map<std::pair<int, int>, Var> e = edge_features;

  for (const auto& layer : model.layers) {
    bool res_v = layer.in == layer.out;
    bool res_e = layer.edge_in == layer.out;
    // sender projections, computed once per vertex
    std::vector<Var> vh(static_cast<std::size_t>(n)), ah(static_cast<std::size_t>(n)),
        bh(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      vh[static_cast<std::size_t>(i)] = matvec(layer.v_w, h[static_cast<std::size_t>(i)]);
      ah[static_cast<std::size_t>(i)] = matvec(layer.a_w, h[static_cast<std::size_t>(i)]);
      bh[static_cast<std::size_t>(i)] = matvec(layer.b_w, h[static_cast<std::size_t>(i)]);
    }
    std::map<std::pair<int, int>, Var> ce;
    for (const auto& [key, ef] : e) ce.emplace(key, matvec(layer.c_w, ef));

    std::vector<Var> h_next(static_cast<std::size_t>(n));
    std::map<std::pair<int, int>, Var> e_next;
    for (int i = 0; i < n; ++i) {
      Var num, den;
      for (const auto& [j, key] : nbrs[static_cast<std::size_t>(i)]) {
        Var eij = add(add(ah[static_cast<std::size_t>(i)], bh[static_cast<std::size_t>(j)]),
                      add(ce.at(key), layer.e_b));
        if (i == key.first && j == key.second) {
          // canonical direction updates the edge feature
          Var eu = relu(eij);
          e_next.emplace(key, res_e ? add(e.at(key), eu) : eu);
        }
        Var gate = sigmoid_v(eij);
        Var term = mul(gate, vh[static_cast<std::size_t>(j)]);
        num = num ? add(num, term) : term;
        den = den ? add(den, gate) : gate;
      }
      Var base = add(matvec(layer.u_w, h[static_cast<std::size_t>(i)]), layer.u_b);
      if (num) base = add(base, div(num, add_scalar(den, 1e-6)));
      Var hu = relu(base);
      h_next[static_cast<std::size_t>(i)] =
          res_v ? add(h[static_cast<std::size_t>(i)], hu) : hu;
    }
    h = std::move(h_next);
    e = std::move(e_next);
  }

  Var pooled;
  if (model.cfg.head == GcnConfig::Head::Concat) {
    pooled = concat_vec(h);
  } else {
    Var sum;
    for (const auto& hv : h) sum = sum ? add(sum, hv) : hv;
    pooled = scale(sum, 1.0 / std::max(1, n));
  }
  bool training = dropout_rng != nullptr;
  Rng dummy(0);
  Rng& rng = training ? *dropout_rng : dummy;
  Var z = relu(linear(model.fc1_w, model.fc1_b, pooled));
  z = dropout(z, model.cfg.dropout, rng, training);
  z = relu(linear(model.fc2_w, model.fc2_b, z));
  z = dropout(z, model.cfg.dropout, rng, training);
  return z;
}

}  // namespace percog::gnn
