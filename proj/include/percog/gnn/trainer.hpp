#pragma once

#include <array>

#include "percog/adam.hpp"
#include "percog/gnn/ern.hpp"
#include "percog/gnn/gated_gcn.hpp"
#include "percog/gnn/metrics.hpp"

namespace percog::gnn {

struct TrainConfig {
  VertexVariant variant = VertexVariant::OpLwVen;
  archgraph::LwMode lw_mode = archgraph::LwMode::Top5;
  int hist_bins = 10;
  EdgeMode edge_mode = EdgeMode::MultiErn;
  ErnConfig ern;
  GcnConfig gcn;
  int epochs = 300;
  int batch = 8;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  std::uint64_t seed = 1;
};

struct GraphSample {
  archgraph::CognitionGraph graph;
  std::array<double, 5> labels{};  // Ope, Con, Ext, Agr, Neu in [0,1]
  std::string subject_id;
};

/// GatedGCN + VEN + ERN bank, trained jointly end to end.
struct TrainedModel {
  TrainConfig cfg;
  int vertex_dim = 0;
  bool has_ven = false;
  Ven ven;
  ErnBank bank;
  GcnModel gcn;

  /// Raw head output (training mode when dropout_rng != nullptr).
  Var forward(const archgraph::CognitionGraph& g, Rng* dropout_rng) const;
  /// Evaluation-mode scores clamped to [0,1].
  std::array<double, 5> predict(const archgraph::CognitionGraph& g) const;

  std::vector<Var> all_params() const;
};

/// Builds an untrained model sized for the given graph structure.
TrainedModel make_model(const archgraph::CognitionGraph& structure, const TrainConfig& cfg);

struct TrainCurvePoint {
  int epoch = 0;
  double mse = 0.0;
};

/// Joint MSE training over the 5 traits (Adam, L2 weight decay). Labels
/// must be normalized to [0,1].
void train_regressor(TrainedModel& model, const std::vector<GraphSample>& data,
                     std::vector<TrainCurvePoint>* curve = nullptr);

void save_model(const std::string& path, const TrainedModel& model);
TrainedModel load_model(const std::string& path);

struct CvConfig {
  int folds = 5;
  bool loso = false;      // leave-one-subject-out
  std::uint64_t fold_seed = 7;
};

struct CvFoldMetrics {
  std::array<double, 5> pcc{};
  std::array<double, 5> acc{};
  int test_count = 0;
};

struct CvResult {
  std::array<double, 5> pcc{};  // averaged over folds (or pooled, see below)
  std::array<double, 5> acc{};
  std::vector<CvFoldMetrics> per_fold;
  bool pooled = false;  // single-sample folds force pooling across folds
};

/// Subject-disjoint cross-validation: per fold trains a fresh model and
/// evaluates the held-out subjects; metrics are averaged over folds. When a
/// fold holds fewer than two test samples (LOSO), predictions are pooled
/// across folds and the metrics computed once.
CvResult cross_validate(const std::vector<GraphSample>& data, const TrainConfig& cfg,
                        const CvConfig& cv);

}  // namespace percog::gnn
