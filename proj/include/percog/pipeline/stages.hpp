#pragma once

#include "percog/pipeline/config.hpp"
#include "percog/pipeline/manifest.hpp"

namespace percog::pipeline {

/// Stage composition with content-hash caching: a stage is skipped when its
/// signature (relevant config subtree + input artifact hashes) matches the
/// stamp of a previous run and its outputs still exist. Outputs are
/// write-once; stages never mutate earlier artifacts.
class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig cfg);

  const std::string& root() const { return root_; }
  const std::string& config_hash() const { return config_hash_; }

  StageRecord synth_data();
  StageRecord preprocess();
  StageRecord search(const std::string& subject_filter = "");
  StageRecord encode_graphs();
  StageRecord train_personality(std::string graphs_dir = "", std::string labels_file = "");
  StageRecord evaluate(std::string model_path = "", std::string graphs_dir = "",
                       std::string labels_file = "");

  /// Runs every stage in order; on failure the manifest still records the
  /// partial state before the error is rethrown.
  RunManifest run_all();

  std::vector<std::string> subjects() const;

 private:
  ExperimentConfig cfg_;
  std::string root_;
  std::string config_hash_;
};

/// Reads a delimited labels file: header line then subject_id,ope,con,ext,agr,neu.
std::map<std::string, std::array<double, 5>> read_labels(const std::string& path);
void write_labels(const std::string& path,
                  const std::vector<std::pair<std::string, std::array<double, 5>>>& rows);

}  // namespace percog::pipeline
