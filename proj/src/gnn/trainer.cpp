#include "percog/gnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"

namespace percog::gnn {

using archgraph::CognitionGraph;
using nas::ConfigError;
using nlohmann::json;

namespace {

std::vector<Var> vertex_feature_vars(const TrainedModel& m, const CognitionGraph& g) {
  std::vector<Var> feats;
  feats.reserve(g.vertices.size());
  for (const auto& rec : g.vertices)
    feats.push_back(encode_vertex(rec, m.has_ven ? &m.ven : nullptr, m.cfg.variant,
                                  m.cfg.lw_mode, m.cfg.hist_bins));
  return feats;
}

}  // namespace

Var TrainedModel::forward(const CognitionGraph& g, Rng* dropout_rng) const {
  if (g.lw_mode != cfg.lw_mode || g.hist_bins != cfg.hist_bins)
    throw ConfigError("model forward: graph LW representation does not match the model");
  auto feats = vertex_feature_vars(*this, g);
  auto edges = encode_all_edges(g, feats, bank);
  return gcn_forward(gcn, g, feats, edges, dropout_rng);
}

std::array<double, 5> TrainedModel::predict(const CognitionGraph& g) const {
  Var out = forward(g, nullptr);
  std::array<double, 5> scores{};
  for (int i = 0; i < 5; ++i) scores[static_cast<std::size_t>(i)] =
      std::clamp(out->val[i], 0.0, 1.0);
  return scores;
}

std::vector<Var> TrainedModel::all_params() const {
  std::vector<Var> out = gcn.params();
  if (has_ven) {
    auto vp = ven.params();
    out.insert(out.end(), vp.begin(), vp.end());
  }
  auto bp = bank.params();
  out.insert(out.end(), bp.begin(), bp.end());
  return out;
}

TrainedModel make_model(const CognitionGraph& structure, const TrainConfig& cfg) {
  TrainedModel m;
  m.cfg = cfg;
  m.vertex_dim = vertex_feature_dim(cfg.variant, cfg.lw_mode, cfg.hist_bins);
  m.has_ven = cfg.variant == VertexVariant::OpLwVen;
  Rng rng = Rng(cfg.seed).derive("regressor");
  if (m.has_ven)
    m.ven = make_ven(archgraph::lw_total_dim(cfg.lw_mode, cfg.hist_bins), rng);
  m.bank = make_ern_bank(structure, m.vertex_dim, cfg.edge_mode, cfg.ern, rng);
  int edge_dim = cfg.edge_mode == EdgeMode::Binary ? 1 : m.vertex_dim;
  m.gcn = make_gcn(cfg.variant, m.vertex_dim, edge_dim,
                   static_cast<int>(structure.vertices.size()), cfg.gcn, rng);
  return m;
}

void train_regressor(TrainedModel& model, const std::vector<GraphSample>& data,
                     std::vector<TrainCurvePoint>* curve) {
  if (data.size() < 2)
    throw ConfigError("train_regressor: need at least two training subjects");
  for (const auto& s : data)
    for (double l : s.labels)
      if (l < 0.0 || l > 1.0)
        throw ConfigError("train_regressor: labels must be normalized to [0,1]");

  Adam opt(model.all_params(), model.cfg.lr, model.cfg.weight_decay);
  Rng shuffle_rng = Rng(model.cfg.seed).derive("train-shuffle");
  Rng drop_rng = Rng(model.cfg.seed).derive("dropout");

  std::vector<int> order(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) order[i] = static_cast<int>(i);

  int batch = std::max(1, std::min<int>(model.cfg.batch, static_cast<int>(data.size())));
  for (int epoch = 1; epoch <= model.cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    int steps = 0;
    for (std::size_t off = 0; off < order.size(); off += static_cast<std::size_t>(batch)) {
      std::size_t end = std::min(order.size(), off + static_cast<std::size_t>(batch));
      opt.zero_grad();
      Var total;
      for (std::size_t i = off; i < end; ++i) {
        const GraphSample& s = data[static_cast<std::size_t>(order[i])];
        Var pred = model.forward(s.graph, &drop_rng);
        Tensor target({5});
        for (int t = 0; t < 5; ++t) target[t] = s.labels[static_cast<std::size_t>(t)];
        Var loss = mse(pred, make_const(std::move(target)));
        total = total ? add(total, loss) : loss;
      }
      Var mean = scale(total, 1.0 / static_cast<double>(end - off));
      if (!std::isfinite(value(mean)))
        throw nas::NumericalError("train_regressor: non-finite loss");
      backward(mean);
      opt.step();
      opt.zero_grad();
      epoch_loss += value(mean);
      ++steps;
    }
    if (curve) curve->push_back({epoch, epoch_loss / std::max(1, steps)});
  }
}

namespace {

json tensor_json(const Var& v) {
  return json{{"shape", v->val.shape}, {"values", v->val.v}};
}

void tensor_load(Var& v, const json& j) {
  auto shape = j.at("shape").get<std::vector<int>>();
  auto values = j.at("values").get<std::vector<double>>();
  if (shape != v->val.shape || static_cast<int>(values.size()) != v->val.numel())
    throw ConfigError("model load: tensor shape mismatch");
  v->val.v = std::move(values);
}

json cfg_to_json(const TrainConfig& c) {
  return json{{"variant", vertex_variant_name(c.variant)},
              {"lw_mode", archgraph::lw_mode_name(c.lw_mode)},
              {"hist_bins", c.hist_bins},
              {"edge_mode", edge_mode_name(c.edge_mode)},
              {"ern",
               {{"heads", c.ern.heads},
                {"kernel_extent", c.ern.kernel_extent},
                {"d_model", c.ern.d_model},
                {"conv_stride", c.ern.conv_stride}}},
              {"gcn",
               {{"layers", c.gcn.layers},
                {"dropout", c.gcn.dropout},
                {"head_hidden", c.gcn.head_hidden},
                {"head", c.gcn.head == GcnConfig::Head::Concat ? "concat" : "mean_pool"}}},
              {"epochs", c.epochs},
              {"batch", c.batch},
              {"lr", c.lr},
              {"weight_decay", c.weight_decay},
              {"seed", c.seed}};
}

TrainConfig cfg_from_json(const json& j) {
  TrainConfig c;
  c.variant = vertex_variant_from_name(j.at("variant").get<std::string>());
  c.lw_mode = archgraph::lw_mode_from_name(j.at("lw_mode").get<std::string>());
  c.hist_bins = j.at("hist_bins").get<int>();
  c.edge_mode = edge_mode_from_name(j.at("edge_mode").get<std::string>());
  c.ern.heads = j.at("ern").at("heads").get<int>();
  c.ern.kernel_extent = j.at("ern").at("kernel_extent").get<int>();
  c.ern.d_model = j.at("ern").at("d_model").get<int>();
  c.ern.conv_stride = j.at("ern").at("conv_stride").get<int>();
  c.gcn.layers = j.at("gcn").at("layers").get<int>();
  c.gcn.dropout = j.at("gcn").at("dropout").get<double>();
  c.gcn.head_hidden = j.at("gcn").at("head_hidden").get<int>();
  c.gcn.head = j.at("gcn").at("head").get<std::string>() == "concat"
                   ? GcnConfig::Head::Concat
                   : GcnConfig::Head::MeanPool;
  c.epochs = j.at("epochs").get<int>();
  c.batch = j.at("batch").get<int>();
  c.lr = j.at("lr").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void save_model(const std::string& path, const TrainedModel& model) {
  json erns = json::object();
  for (const auto& [key, e] : model.bank.erns) {
    json params = json::array();
    for (const auto& p : e.params()) params.push_back(tensor_json(p));
    erns[key] = std::move(params);
  }
  json gcn_params = json::array();
  for (const auto& p : model.gcn.params()) gcn_params.push_back(tensor_json(p));
  json doc{{"format", "percog-model"},
           {"version", 1},
           {"config", cfg_to_json(model.cfg)},
           {"vertex_dim", model.vertex_dim},
           {"census", model.gcn.census},
           {"erns", std::move(erns)},
           {"gcn", std::move(gcn_params)}};
  if (model.has_ven) {
    json ven_params = json::array();
    for (const auto& p : model.ven.params()) ven_params.push_back(tensor_json(p));
    doc["ven"] = std::move(ven_params);
  }
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("save_model: cannot open " + tmp);
    f << doc.dump();
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("save_model: rename failed for " + path);
}

TrainedModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_model: cannot open " + path);
  json doc = json::parse(f);
  if (doc.value("format", "") != "percog-model" || doc.value("version", 0) != 1)
    throw ConfigError("load_model: unrecognised container in " + path);

  TrainedModel m;
  m.cfg = cfg_from_json(doc.at("config"));
  m.vertex_dim = doc.at("vertex_dim").get<int>();
  m.has_ven = m.cfg.variant == VertexVariant::OpLwVen;
  Rng rng(1);
  if (m.has_ven) {
    m.ven = make_ven(archgraph::lw_total_dim(m.cfg.lw_mode, m.cfg.hist_bins), rng);
    auto params = m.ven.params();
    const auto& jp = doc.at("ven");
    for (std::size_t i = 0; i < params.size(); ++i) tensor_load(params[i], jp.at(i));
  }
  m.bank.mode = m.cfg.edge_mode;
  m.bank.cfg = m.cfg.ern;
  m.bank.dim = m.vertex_dim;
  for (const auto& [key, jparams] : doc.at("erns").items()) {
    Ern e = make_ern(m.vertex_dim, m.cfg.ern, rng);
    auto params = e.params();
    for (std::size_t i = 0; i < params.size(); ++i) tensor_load(params[i], jparams.at(i));
    m.bank.erns.emplace(key, std::move(e));
  }
  int census = doc.at("census").get<int>();
  int edge_dim = m.cfg.edge_mode == EdgeMode::Binary ? 1 : m.vertex_dim;
  m.gcn = make_gcn(m.cfg.variant, m.vertex_dim, edge_dim, std::max(census, 0),
                   m.cfg.gcn, rng);
  m.gcn.census = census;
  auto gp = m.gcn.params();
  const auto& jg = doc.at("gcn");
  for (std::size_t i = 0; i < gp.size(); ++i) tensor_load(gp[i], jg.at(i));
  return m;
}

CvResult cross_validate(const std::vector<GraphSample>& data, const TrainConfig& cfg,
                        const CvConfig& cv) {
  std::set<std::string> subject_set;
  for (const auto& s : data) subject_set.insert(s.subject_id);
  std::vector<std::string> subjects(subject_set.begin(), subject_set.end());
  int k = cv.loso ? static_cast<int>(subjects.size()) : cv.folds;
  if (k < 1 || k > static_cast<int>(subjects.size()))
    throw ConfigError("cross_validate: fold count incompatible with the subject count");

  Rng fold_rng = Rng(cv.fold_seed).derive("folds");
  fold_rng.shuffle(subjects);
  std::vector<std::set<std::string>> fold_subjects(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < subjects.size(); ++i)
    fold_subjects[i % static_cast<std::size_t>(k)].insert(subjects[i]);
  for (const auto& fs : fold_subjects)
    if (fs.empty()) throw ConfigError("cross_validate: a fold has no test subject");

  CvResult res;
  std::array<std::vector<double>, 5> pooled_pred, pooled_true;
  bool need_pool = false;
  for (const auto& fs : fold_subjects) {
    int count = 0;
    for (const auto& s : data)
      if (fs.count(s.subject_id)) ++count;
    if (count < 2) need_pool = true;
  }
  res.pooled = need_pool;

  for (int f = 0; f < k; ++f) {
    std::vector<GraphSample> train;
    std::vector<const GraphSample*> test;
    for (const auto& s : data) {
      if (fold_subjects[static_cast<std::size_t>(f)].count(s.subject_id))
        test.push_back(&s);
      else
        train.push_back(s);
    }
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = Rng(cfg.seed).derive("fold", static_cast<std::uint64_t>(f)).next_u64();
    TrainedModel model = make_model(train.front().graph, fold_cfg);
    train_regressor(model, train);

    CvFoldMetrics fm;
    fm.test_count = static_cast<int>(test.size());
    std::array<std::vector<double>, 5> preds, trues;
    for (const auto* s : test) {
      auto p = model.predict(s->graph);
      for (int t = 0; t < 5; ++t) {
        preds[static_cast<std::size_t>(t)].push_back(p[static_cast<std::size_t>(t)]);
        trues[static_cast<std::size_t>(t)].push_back(s->labels[static_cast<std::size_t>(t)]);
        if (need_pool) {
          pooled_pred[static_cast<std::size_t>(t)].push_back(p[static_cast<std::size_t>(t)]);
          pooled_true[static_cast<std::size_t>(t)].push_back(
              s->labels[static_cast<std::size_t>(t)]);
        }
      }
    }
    if (!need_pool) {
      for (int t = 0; t < 5; ++t) {
        fm.pcc[static_cast<std::size_t>(t)] =
            pcc(preds[static_cast<std::size_t>(t)], trues[static_cast<std::size_t>(t)]);
        fm.acc[static_cast<std::size_t>(t)] =
            acc(preds[static_cast<std::size_t>(t)], trues[static_cast<std::size_t>(t)]);
      }
    }
    res.per_fold.push_back(fm);
  }

  if (need_pool) {
    for (int t = 0; t < 5; ++t) {
      res.pcc[static_cast<std::size_t>(t)] =
          pcc(pooled_pred[static_cast<std::size_t>(t)], pooled_true[static_cast<std::size_t>(t)]);
      res.acc[static_cast<std::size_t>(t)] =
          acc(pooled_pred[static_cast<std::size_t>(t)], pooled_true[static_cast<std::size_t>(t)]);
    }
  } else {
    for (int t = 0; t < 5; ++t) {
      double sp = 0.0, sa = 0.0;
      for (const auto& fm : res.per_fold) {
        sp += fm.pcc[static_cast<std::size_t>(t)];
        sa += fm.acc[static_cast<std::size_t>(t)];
      }
      res.pcc[static_cast<std::size_t>(t)] = sp / static_cast<double>(k);
      res.acc[static_cast<std::size_t>(t)] = sa / static_cast<double>(k);
    }
  }
  return res;
}

}  // namespace percog::gnn
