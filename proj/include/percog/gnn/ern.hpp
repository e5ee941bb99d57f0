#pragma once

#include <map>
#include <string>

#include "percog/archgraph/graph.hpp"
#include "percog/autodiff.hpp"

namespace percog::gnn {

struct ErnConfig {
  int heads = 2;
  int kernel_extent = 3;
  int d_model = 4;     // channel width of the 1-D representations
  int conv_stride = 4; // step-1 convolution stride (compacts the sequence)
};

/// Edge relationship network: a small two-head cross-attention transformer
/// mapping an adjacent vertex pair to one edge feature of the vertex
/// dimension D.
///   step 1  two-stream 1-D convolution:  F_x = relu(conv(v_x))      (d,L)
///   step 2  cross-vertex attention maps (queries from the partner)
///   step 3  attention-weighted representations F_a^x, F_b^x         (d,L)
///   step 4  position-concatenation + multi-head self-attention + FC (d,2L)
///   step 5  channel collapse and projection to the edge feature     (D)
struct Ern {
  ErnConfig cfg;
  int dim = 0;  // D
  int seq = 0;  // L

  Var conv_a, conv_b;                      // (k,1,d)
  std::vector<Var> qa, ka, va;             // per head (dh,d): cross onto a
  std::vector<Var> qb, kb, vb;             // per head: cross onto b
  std::vector<Var> sq, sk, sv;             // self-attention heads
  Var ff_w, ff_b;                          // (d,d), (d)
  Var pool_w;                              // (1,d)
  Var out_w, out_b;                        // (D,2L), (D)

  Var forward(const Var& v_a, const Var& v_b) const;
  std::vector<Var> params() const;
};

Ern make_ern(int dim, const ErnConfig& cfg, Rng& rng);

enum class EdgeMode { Binary, SingleErn, MultiErn };
const char* edge_mode_name(EdgeMode m);
EdgeMode edge_mode_from_name(const std::string& name);

/// ERNs keyed by (module, cell kind, within-cell pair position); cells of
/// the same kind within a module share the same set. Pairs of edges in
/// different cells of a block use the module's dedicated boundary entry.
struct ErnBank {
  EdgeMode mode = EdgeMode::MultiErn;
  ErnConfig cfg;
  int dim = 0;
  std::map<std::string, Ern> erns;

  static std::string key(nas::ModuleTag module, nas::CellKind kind, int position);
  static constexpr int kBoundary = -1;

  const Ern& at(const std::string& k) const;
  std::vector<Var> params() const;
};

/// Within-cell position of an adjacent edge pair: index into the
/// lexicographically ordered list of locally adjacent (edge,edge) index
/// pairs for a cell with n_nodes intermediates.
std::vector<std::pair<int, int>> cell_adjacent_pairs(int n_nodes);
int pair_position(int n_nodes, int e1, int e2);

/// Creates the bank covering every (module, kind, position) present in the
/// graph, plus boundary entries. Binary mode owns no networks.
ErnBank make_ern_bank(const archgraph::CognitionGraph& g, int vertex_dim, EdgeMode mode,
                      const ErnConfig& cfg, Rng& rng);

/// Computes one feature per adjacency pair (keyed u<v; the reverse arc
/// carries the same feature). Vertex features are passed in graph order.
std::map<std::pair<int, int>, Var> encode_all_edges(const archgraph::CognitionGraph& g,
                                                    const std::vector<Var>& vertex_features,
                                                    const ErnBank& bank);

}  // namespace percog::gnn
