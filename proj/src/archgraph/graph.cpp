#include "percog/archgraph/graph.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "json.hpp"

namespace percog::archgraph {

using nas::Cell;
using nas::ConfigError;
using nas::OpKind;
using nlohmann::json;

std::vector<double> VertexRecord::lw_concat() const {
  std::vector<double> out;
  for (const auto& part : lw) out.insert(out.end(), part.begin(), part.end());
  return out;
}

CognitionGraph build_graph(const nas::CognitiveNet& net, const std::string& subject_id,
                           const std::string& alignment, LwMode mode, int hist_bins) {
  CognitionGraph g;
  g.subject_id = subject_id;
  g.lw_mode = mode;
  g.hist_bins = hist_bins;

  bool full_depth = true;
  for (const auto& b : net.blocks)
    if (b.active_depth < static_cast<int>(b.cells.size())) full_depth = false;
  g.heterogeneity = (alignment != "none" || full_depth) ? "isomorphic" : "heterogeneous";

  // vertices in canonical order; per-block node ids for adjacency
  struct VertexNodes {
    int a, b;  // global-in-block node ids of the edge endpoints
  };
  std::vector<std::vector<int>> block_vertices;  // vertex indices per block
  std::vector<VertexNodes> vertex_nodes;

  for (const auto& blk : net.blocks) {
    std::vector<int> verts;
    int depth = blk.active_depth;
    // node ids within this stack: formal inputs 0 and 1; output of cell c is
    // id 2+c; intermediates are allocated past the outputs
    int next_node = 2 + depth;
    for (int c = 0; c < depth; ++c) {
      const Cell& cell = blk.cells[static_cast<std::size_t>(c)];
      std::vector<int> node_ids(static_cast<std::size_t>(2 + cell.n_nodes));
      node_ids[0] = c;      // output of cell c-2 (formal input 0 at the start)
      node_ids[1] = c + 1;  // output of cell c-1 (formal input 1 at the start)
      for (int m = 0; m < cell.n_nodes; ++m)
        node_ids[static_cast<std::size_t>(2 + m)] = next_node++;
      for (const auto& e : cell.edges) {
        VertexRecord rec;
        for (int k = 0; k < nas::kNumOps; ++k) {
          rec.valid[static_cast<std::size_t>(k)] = e.valid[static_cast<std::size_t>(k)];
          rec.op_alphas[static_cast<std::size_t>(k)] =
              e.valid[static_cast<std::size_t>(k)] ? e.alphas->val[k] : 0.0;
        }
        for (int k = 0; k < nas::kNumOps; ++k) {
          int wi = nas::weighted_index(static_cast<OpKind>(k));
          if (wi < 0) continue;
          auto& slot = rec.lw[static_cast<std::size_t>(wi)];
          if (e.weights[static_cast<std::size_t>(k)]) {
            slot = mode == LwMode::Top5
                       ? extract_lw_top5(e.weights[static_cast<std::size_t>(k)]->val)
                       : extract_lw_hist(e.weights[static_cast<std::size_t>(k)]->val,
                                         hist_bins);
          } else {
            slot.assign(static_cast<std::size_t>(
                            lw_op_dim(static_cast<OpKind>(k), mode, hist_bins)),
                        0.0);
          }
        }
        rec.module = blk.module;
        rec.block_index = blk.index;
        rec.block_kind = blk.kind;
        rec.cell_index = c;
        rec.edge_i = e.i;
        rec.edge_j = e.j;
        int vid = static_cast<int>(g.vertices.size());
        g.vertices.push_back(std::move(rec));
        verts.push_back(vid);
        vertex_nodes.push_back({node_ids[static_cast<std::size_t>(e.i)],
                                node_ids[static_cast<std::size_t>(e.j)]});
      }
    }
    block_vertices.push_back(std::move(verts));
  }

  for (const auto& verts : block_vertices) {
    for (std::size_t x = 0; x < verts.size(); ++x)
      for (std::size_t y = x + 1; y < verts.size(); ++y) {
        const VertexNodes& u = vertex_nodes[static_cast<std::size_t>(verts[x])];
        const VertexNodes& v = vertex_nodes[static_cast<std::size_t>(verts[y])];
        if (u.a == v.a || u.a == v.b || u.b == v.a || u.b == v.b)
          g.adjacency.emplace_back(verts[x], verts[y]);
      }
  }
  std::sort(g.adjacency.begin(), g.adjacency.end());
  return g;
}

std::string graph_to_json(const CognitionGraph& g) {
  json verts = json::array();
  for (const auto& r : g.vertices) {
    json lw = json::object();
    for (int k = 0; k < nas::kNumOps; ++k) {
      int wi = nas::weighted_index(static_cast<OpKind>(k));
      if (wi >= 0) lw[nas::op_name(static_cast<OpKind>(k))] = r.lw[static_cast<std::size_t>(wi)];
    }
    std::vector<int> valid;
    for (char c : r.valid) valid.push_back(c ? 1 : 0);
    verts.push_back(json{{"module", nas::module_name(r.module)},
                         {"block_index", r.block_index},
                         {"block_kind", nas::cell_kind_name(r.block_kind)},
                         {"cell_index", r.cell_index},
                         {"edge", {r.edge_i, r.edge_j}},
                         {"valid", valid},
                         {"op_alphas", r.op_alphas},
                         {"lw", std::move(lw)}});
  }
  json adj = json::array();
  for (const auto& [u, v] : g.adjacency) adj.push_back(json::array({u, v}));
  json doc{{"format", "percog-graph"},
           {"version", g.version},
           {"subject_id", g.subject_id},
           {"heterogeneity_tag", g.heterogeneity},
           {"lw_mode", lw_mode_name(g.lw_mode)},
           {"hist_bins", g.hist_bins},
           {"ordering_spec", g.ordering},
           {"vertices", std::move(verts)},
           {"adjacency", std::move(adj)}};
  return doc.dump();
}

CognitionGraph graph_from_json(const std::string& text) {
  json doc = json::parse(text);
  if (doc.value("format", "") != "percog-graph" || doc.value("version", 0) != 1)
    throw ConfigError("graph_from_json: unrecognised graph container");
  CognitionGraph g;
  g.subject_id = doc.value("subject_id", "");
  g.heterogeneity = doc.value("heterogeneity_tag", "heterogeneous");
  g.lw_mode = lw_mode_from_name(doc.at("lw_mode").get<std::string>());
  g.hist_bins = doc.at("hist_bins").get<int>();
  g.ordering = doc.value("ordering_spec", g.ordering);
  for (const auto& jv : doc.at("vertices")) {
    VertexRecord r;
    r.module = nas::module_from_name(jv.at("module").get<std::string>());
    r.block_index = jv.at("block_index").get<int>();
    r.block_kind = nas::cell_kind_from_name(jv.at("block_kind").get<std::string>());
    r.cell_index = jv.at("cell_index").get<int>();
    r.edge_i = jv.at("edge")[0].get<int>();
    r.edge_j = jv.at("edge")[1].get<int>();
    auto valid = jv.at("valid").get<std::vector<int>>();
    auto alphas = jv.at("op_alphas").get<std::vector<double>>();
    if (valid.size() != nas::kNumOps || alphas.size() != nas::kNumOps)
      throw ConfigError("graph_from_json: malformed vertex record");
    for (int k = 0; k < nas::kNumOps; ++k) {
      r.valid[static_cast<std::size_t>(k)] = valid[static_cast<std::size_t>(k)] ? 1 : 0;
      r.op_alphas[static_cast<std::size_t>(k)] = alphas[static_cast<std::size_t>(k)];
    }
    const auto& lw = jv.at("lw");
    for (int k = 0; k < nas::kNumOps; ++k) {
      int wi = nas::weighted_index(static_cast<OpKind>(k));
      if (wi >= 0)
        r.lw[static_cast<std::size_t>(wi)] =
            lw.at(nas::op_name(static_cast<OpKind>(k))).get<std::vector<double>>();
    }
    g.vertices.push_back(std::move(r));
  }
  for (const auto& ja : doc.at("adjacency"))
    g.adjacency.emplace_back(ja[0].get<int>(), ja[1].get<int>());
  return g;
}

void save_graph(const std::string& path, const CognitionGraph& g) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("save_graph: cannot open " + tmp);
    f << graph_to_json(g);
    if (!f) throw std::runtime_error("save_graph: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("save_graph: rename failed for " + path);
}

CognitionGraph load_graph(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_graph: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return graph_from_json(text);
}

long expected_vertex_count(int n_nodes, long total_active_cells) {
  long per_cell = static_cast<long>(2 + n_nodes) * (1 + n_nodes) / 2 - 1;
  return per_cell * total_active_cells;
}

GraphCensus census(const CognitionGraph& g) {
  return {static_cast<long>(g.vertices.size()), static_cast<long>(g.adjacency.size())};
}

}  // namespace percog::archgraph
