#pragma once

#include <map>

#include "percog/archgraph/graph.hpp"
#include "percog/gnn/vertex_features.hpp"

namespace percog::gnn {

struct GcnConfig {
  int layers = 6;
  double dropout = 0.3;
  int head_hidden = 64;
  enum class Head { Concat, MeanPool } head = Head::Concat;
};

/// One residual gated graph convolution layer. For receiver i with
/// neighbours j:
///   E_ij   = A h_i + B h_j + C e_ij + be
///   h_i'   = [h_i +] relu(U h_i + bu + sum_j sigma(E_ij).(V h_j) / (sum_j sigma(E_ij) + 1e-6))
///   e_uv'  = [e_uv +] relu(E_uv)  (canonical direction u<v)
/// residuals apply when the widths match.
struct GcnLayer {
  int in = 0, out = 0, edge_in = 0;
  Var u_w, u_b, v_w, a_w, b_w, c_w, e_b;
};

struct GcnModel {
  GcnConfig cfg;
  int d_in = 0;
  int edge_d_in = 0;
  int census = -1;  // vertex count the concat head was built for (-1: mean pool)
  std::vector<GcnLayer> layers;
  Var fc1_w, fc1_b, fc2_w, fc2_b;

  std::vector<Var> params() const;
};

/// Layer output widths: first equals d_in; the remaining five follow the
/// per-variant rule (10,10,10,5,5 for OP features, halving otherwise),
/// floored at 1.
std::vector<int> gcn_layer_widths(VertexVariant variant, int d_in, int n_layers = 6);

GcnModel make_gcn(VertexVariant variant, int d_in, int edge_d_in, int n_vertices,
                  const GcnConfig& cfg, Rng& rng);

/// Raw 5-dim head output (pre-clamp). dropout_rng non-null means training
/// mode. Census mismatches in concat-head mode are an error.
Var gcn_forward(const GcnModel& model, const archgraph::CognitionGraph& g,
                const std::vector<Var>& vertex_features,
                const std::map<std::pair<int, int>, Var>& edge_features,
                Rng* dropout_rng);

}  // namespace percog::gnn
