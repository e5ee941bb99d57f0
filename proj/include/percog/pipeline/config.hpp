#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "percog/archgraph/align.hpp"
#include "percog/gnn/trainer.hpp"
#include "percog/nas/search.hpp"

namespace percog::pipeline {

struct ConfigViolation {
  std::string path;     // dotted key path, e.g. "edge.mode"
  std::string message;  // what is wrong and what is allowed
};

struct ConfigValidationError : std::runtime_error {
  std::vector<ConfigViolation> violations;
  explicit ConfigValidationError(std::vector<ConfigViolation> v);
};

/// Nested experiment configuration; every key has a default and the JSON
/// document is schema-validated (unknown keys rejected, every violation
/// reported, not just the first).
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string out_root = "runs/exp";

  struct Dataset {
    std::string mode = "synthetic";  // synthetic | files
    std::string path;                // files mode: directory of input artifacts
    int n_subjects = 8;
    int clip_frames = 345;
    double frame_rate = 25.0;
    int delay = 7;          // injected reaction delay; -1 draws one per subject
    double noise_sigma = 0.0;
    std::string map_mode = "subject";  // identity | subject
  } dataset;

  struct Ingest {
    int window_stride = 40;
    int window_start = 0;
  } ingest;

  struct SearchSpace {
    int n_nodes = 4;
    int n_reg = 3;
    std::array<int, 3> channels{64, 128, 256};
    int stem_channels = 64;
    int lstm_hidden = 64;
    int decoder_channels = 0;
    std::string param_mode = "ip";        // ip | ps
    std::string modality = "audio_face";  // audio_face | face | face_sentence
    std::vector<std::string> validity_regular;  // empty -> defaults
    std::vector<std::string> validity_down;
    std::vector<std::string> validity_up;
  } search_space;

  struct Nas {
    int max_epochs = 300;
    int batch_size = 60;
    double lr_alpha = 0.05;
    double lr_omega = 0.001;
    double epsilon = 0.01;
    double converge_rel = 1e-4;
    int converge_window = 10;
    bool depth_search = true;
    double depth_holdout = 0.2;
    std::string mask_mode = "exclusive";  // exclusive | inclusive
    int workers = 1;
  } nas;

  struct Graph {
    std::string lw_mode = "top5";    // top5 | hist
    int hist_bins = 10;
    std::string alignment = "none";  // none | block_max | distill | fixed_depth_search
    int distill_target_depth = 0;
    int distill_epoch_cap = 150;
    double distill_tolerance = 0.10;
  } graph;

  struct Vertex {
    std::string variant = "oplw_ven";  // op | lw | oplw_c | oplw_w | oplw_ven
  } vertex;

  struct Edge {
    std::string mode = "multi_ern";  // binary | single_ern | multi_ern
    int heads = 2;
    int kernel_extent = 3;
    int d_model = 4;
    int conv_stride = 4;
  } edge;

  struct Regressor {
    int epochs = 300;
    int batch = 8;
    double lr = 1e-3;
    double weight_decay = 1e-4;
    double dropout = 0.3;
    int head_hidden = 64;
    int folds = 5;
    bool loso = false;
    std::string head = "auto";  // auto | concat | mean_pool
  } regressor;

  // conversions to module-level configs
  nas::NetSpec net_spec() const;
  nas::SearchConfig search_config() const;
  gnn::TrainConfig train_config(bool heterogeneous) const;
  archgraph::DistillConfig distill_config() const;
  archgraph::LwMode lw_mode() const;
};

/// Parses and schema-checks a JSON config document; throws
/// ConfigValidationError carrying every violation.
ExperimentConfig parse_config_text(const std::string& text);

/// File-level wrapper for the CLI.
ExperimentConfig validate_config(const std::string& path);

std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace percog::pipeline
