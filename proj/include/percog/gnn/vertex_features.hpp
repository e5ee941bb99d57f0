#pragma once

#include "percog/archgraph/graph.hpp"
#include "percog/gnn/ven.hpp"

namespace percog::gnn {

/// The five vertex-feature variants. All vertices of one experiment share
/// one variant, one LW mode and therefore one dimension:
///   op       -> the 10 operation parameters
///   lw       -> the concatenated LW representation S
///   oplw_c   -> [10 alphas, S]
///   oplw_w   -> [5 weightless alphas, S weighted per component by its op's alpha]
///   oplw_ven -> [5 weightless alphas, VEN(weighted alphas) .* S]
enum class VertexVariant { Op, Lw, OpLwC, OpLwW, OpLwVen };

const char* vertex_variant_name(VertexVariant v);
VertexVariant vertex_variant_from_name(const std::string& name);

int vertex_feature_dim(VertexVariant variant, archgraph::LwMode mode, int hist_bins);

/// Encodes one vertex. The VEN is only consulted for the oplw_ven variant
/// (and must be non-null there); other variants yield constant features.
Var encode_vertex(const archgraph::VertexRecord& rec, const Ven* ven,
                  VertexVariant variant, archgraph::LwMode mode, int hist_bins);

}  // namespace percog::gnn
