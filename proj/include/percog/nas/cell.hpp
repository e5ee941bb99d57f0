#pragma once

#include <utility>
#include <vector>

#include "percog/autodiff.hpp"
#include "percog/nas/ops.hpp"
#include "percog/rng.hpp"

namespace percog::nas {

/// One candidate-operation bundle on a directed edge (i,j) of a cell. All
/// ops map (C,T_in) to (C,T_out) where T_out follows the edge role. The
/// mixing coefficients are softmax(alphas) restricted to the valid ops;
/// invalid ops keep alpha == 0 and own no weights.
struct MixedEdge {
  int i = 0, j = 0;
  EdgeRole role = EdgeRole::Regular;
  int channels = 0;
  int stride = 1;
  ValidityMask valid{};
  Var alphas;                        // (10,); shared node in PS mode
  std::array<Var, kNumOps> weights;  // (K,C,C) per valid weighted op

  Var forward(const Var& x) const;

  /// Raw single-operation output (unmixed); used by tests and oracles.
  Var op_forward(OpKind k, const Var& x) const;

  int valid_count() const;
};

/// Small DAG of 2 input nodes and n_nodes intermediates; every intermediate
/// is connected to all previous nodes. Node j is the sum of all its incoming
/// mixed edges. The cell emits:
///  - next:          1x1 projection (after ReLU) of the intermediate concat,
///                   feeds the next cell,
///  - contribution:  1x1 projection of next, summed into the block output.
/// Both projections are bias-free.
struct Cell {
  CellKind kind = CellKind::Regular;
  int n_nodes = 4;
  int channels = 0;
  std::vector<MixedEdge> edges;  // ordered: (0,2),(1,2),(0,3),(1,3),(2,3),...
  Var out_proj;      // (1, n_nodes*channels, channels)
  Var contrib_proj;  // (1, channels, channels)

  struct Out {
    Var next;
    Var contribution;
  };
  Out forward(const Var& prev_prev, const Var& prev) const;

  /// Ordered node pairs (i,j), i<j, j>=2; no edge between the two inputs.
  static std::vector<std::pair<int, int>> edge_pairs(int n_nodes);
};

/// Builds a cell with freshly initialised parameters. In PS mode the caller
/// passes the shared alpha vars; otherwise pass an empty vector.
Cell make_cell(CellKind kind, int n_nodes, int channels, const ValidityTable& validity,
               Rng& rng, const std::vector<Var>& shared_alphas = {});

EdgeRole edge_role(CellKind kind, int from_node);

}  // namespace percog::nas
