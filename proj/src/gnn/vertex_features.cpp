#include "percog/gnn/vertex_features.hpp"

namespace percog::gnn {

using archgraph::LwMode;
using archgraph::VertexRecord;
using nas::ConfigError;
using nas::OpKind;

const char* vertex_variant_name(VertexVariant v) {
  switch (v) {
    case VertexVariant::Op: return "op";
    case VertexVariant::Lw: return "lw";
    case VertexVariant::OpLwC: return "oplw_c";
    case VertexVariant::OpLwW: return "oplw_w";
    case VertexVariant::OpLwVen: return "oplw_ven";
  }
  return "op";
}

VertexVariant vertex_variant_from_name(const std::string& name) {
  if (name == "op") return VertexVariant::Op;
  if (name == "lw") return VertexVariant::Lw;
  if (name == "oplw_c") return VertexVariant::OpLwC;
  if (name == "oplw_w") return VertexVariant::OpLwW;
  if (name == "oplw_ven") return VertexVariant::OpLwVen;
  throw ConfigError("unknown vertex variant: " + name +
                    " (expected op|lw|oplw_c|oplw_w|oplw_ven)");
}

int vertex_feature_dim(VertexVariant variant, LwMode mode, int hist_bins) {
  int s = archgraph::lw_total_dim(mode, hist_bins);
  switch (variant) {
    case VertexVariant::Op: return nas::kNumOps;
    case VertexVariant::Lw: return s;
    case VertexVariant::OpLwC: return nas::kNumOps + s;
    case VertexVariant::OpLwW: return nas::kNumWeightless + s;
    case VertexVariant::OpLwVen: return nas::kNumWeightless + s;
  }
  return 0;
}

namespace {

std::vector<double> weightless_alphas(const VertexRecord& rec) {
  std::vector<double> out(nas::kNumWeightless, 0.0);
  for (int k = 0; k < nas::kNumOps; ++k) {
    int wi = nas::weightless_index(static_cast<OpKind>(k));
    if (wi >= 0) out[static_cast<std::size_t>(wi)] = rec.op_alphas[static_cast<std::size_t>(k)];
  }
  return out;
}

std::vector<double> weighted_alphas(const VertexRecord& rec) {
  std::vector<double> out(nas::kNumWeighted, 0.0);
  for (int k = 0; k < nas::kNumOps; ++k) {
    int wi = nas::weighted_index(static_cast<OpKind>(k));
    if (wi >= 0) out[static_cast<std::size_t>(wi)] = rec.op_alphas[static_cast<std::size_t>(k)];
  }
  return out;
}

// per-component alpha of the owning op, aligned with the concatenated S
std::vector<double> owner_alphas(const VertexRecord& rec, LwMode mode, int hist_bins) {
  std::vector<double> out;
  for (int k = 0; k < nas::kNumOps; ++k) {
    int wi = nas::weighted_index(static_cast<OpKind>(k));
    if (wi < 0) continue;
    int d = archgraph::lw_op_dim(static_cast<OpKind>(k), mode, hist_bins);
    out.insert(out.end(), static_cast<std::size_t>(d),
               rec.op_alphas[static_cast<std::size_t>(k)]);
  }
  return out;
}

}  // namespace

Var encode_vertex(const VertexRecord& rec, const Ven* ven, VertexVariant variant,
                  LwMode mode, int hist_bins) {
  switch (variant) {
    case VertexVariant::Op: {
      std::vector<double> a(rec.op_alphas.begin(), rec.op_alphas.end());
      return make_const(Tensor::vec(std::move(a)));
    }
    case VertexVariant::Lw:
      return make_const(Tensor::vec(rec.lw_concat()));
    case VertexVariant::OpLwC: {
      std::vector<double> f(rec.op_alphas.begin(), rec.op_alphas.end());
      auto s = rec.lw_concat();
      f.insert(f.end(), s.begin(), s.end());
      return make_const(Tensor::vec(std::move(f)));
    }
    case VertexVariant::OpLwW: {
      std::vector<double> f = weightless_alphas(rec);
      auto s = rec.lw_concat();
      auto own = owner_alphas(rec, mode, hist_bins);
      for (std::size_t i = 0; i < s.size(); ++i) f.push_back(own[i] * s[i]);
      return make_const(Tensor::vec(std::move(f)));
    }
    case VertexVariant::OpLwVen: {
      if (ven == nullptr)
        throw ConfigError("encode_vertex: the oplw_ven variant needs a VEN");
      auto s = rec.lw_concat();
      if (static_cast<int>(s.size()) != ven->out_dim)
        throw ConfigError("encode_vertex: VEN output dimension mismatch");
      Var aw = make_const(Tensor::vec(weighted_alphas(rec)));
      Var weighting = ven->forward(aw);  // elementwise weighting of S
      Var prod = mul(weighting, make_const(Tensor::vec(std::move(s))));
      Var kn = make_const(Tensor::vec(weightless_alphas(rec)));
      return concat_vec({kn, prod});
    }
  }
  throw ConfigError("encode_vertex: unknown variant");
}

}  // namespace percog::gnn
