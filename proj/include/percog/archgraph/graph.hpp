#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "percog/archgraph/lw_repr.hpp"
#include "percog/nas/checkpoint.hpp"
#include "percog/nas/network.hpp"

namespace percog::archgraph {

/// One graph vertex = one directed CNN edge: its ten operation parameters
/// (invalid operations zeroed), the per-weighted-op LW representation, and
/// structural tags.
struct VertexRecord {
  std::array<double, nas::kNumOps> op_alphas{};
  std::array<std::vector<double>, nas::kNumWeighted> lw;  // canonical weighted-op order
  std::array<char, nas::kNumOps> valid{};
  nas::ModuleTag module = nas::ModuleTag::Visual;
  int block_index = 0;
  nas::CellKind block_kind = nas::CellKind::Regular;
  int cell_index = 0;
  int edge_i = 0, edge_j = 0;

  std::vector<double> lw_concat() const;
};

/// Attributed graph encoding of a searched network. Vertices are listed in
/// the canonical order (module, block, cell, then (i,j)); two vertices are
/// adjacent iff their CNN edges touch the same node. Node identity follows
/// the wiring: within a block's cell stack, cell c's output node is read by
/// cell c+1's `prev` port and cell c+2's `prev_prev` port; the stack's two
/// formal input nodes are distinct. Block boundaries separate stacks.
struct CognitionGraph {
  int version = 1;
  std::string subject_id;
  std::string heterogeneity = "heterogeneous";  // or "isomorphic"
  LwMode lw_mode = LwMode::Top5;
  int hist_bins = 10;
  std::string ordering = "module,block,cell,edge(i,j)";
  std::vector<VertexRecord> vertices;
  std::vector<std::pair<int, int>> adjacency;  // u<v, lexicographically sorted
};

CognitionGraph build_graph(const nas::CognitiveNet& net, const std::string& subject_id,
                           const std::string& alignment, LwMode mode, int hist_bins);

/// Deterministic serialization: the same graph always produces the same
/// bytes, and save/load round-trips losslessly.
std::string graph_to_json(const CognitionGraph& g);
CognitionGraph graph_from_json(const std::string& text);
void save_graph(const std::string& path, const CognitionGraph& g);
CognitionGraph load_graph(const std::string& path);

/// Closed-form vertex count: sum over active cells of C(2+n_nodes,2)-1.
long expected_vertex_count(int n_nodes, long total_active_cells);

struct GraphCensus {
  long vertices = 0;
  long adjacency_pairs = 0;
  bool operator==(const GraphCensus&) const = default;
};
GraphCensus census(const CognitionGraph& g);

}  // namespace percog::archgraph
