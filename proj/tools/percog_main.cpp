#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "percog/pipeline/stages.hpp"

namespace {

using percog::pipeline::ConfigValidationError;
using percog::pipeline::ExperimentConfig;
using percog::pipeline::Pipeline;
using percog::pipeline::StageRecord;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment configuration (JSON)")
      ->required();
  cmd->add_option("--out", opts.out_dir, "output root (overrides out_root)");
  cmd->add_option("--seed", opts.seed, "global seed (overrides the config)")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
}

ExperimentConfig load(const CommonOpts& opts) {
  ExperimentConfig cfg = percog::pipeline::validate_config(opts.config_path);
  if (!opts.out_dir.empty()) cfg.out_root = opts.out_dir;
  if (opts.seed_set) cfg.seed = opts.seed;
  return cfg;
}

void report(const StageRecord& rec) {
  std::cout << rec.name << ": " << rec.status << " (" << rec.outputs.size()
            << " artifacts)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"person-specific reaction-network search and personality regression"};
  app.require_subcommand(1);

  CommonOpts synth_o, prep_o, search_o, encode_o, train_o, eval_o, pipe_o, val_o;
  std::string subject_filter, graphs_dir, labels_file, model_path;

  auto* synth = app.add_subcommand("synth-data", "generate the synthetic dyad corpus");
  add_common(synth, synth_o);
  auto* prep = app.add_subcommand("preprocess", "normalize, extract features, window dyads");
  add_common(prep, prep_o);
  auto* search = app.add_subcommand("search", "person-specific architecture search");
  add_common(search, search_o);
  search->add_option("--subject", subject_filter, "restrict to one subject id");
  auto* encode = app.add_subcommand("encode-graph", "encode checkpoints as graphs");
  add_common(encode, encode_o);
  auto* train = app.add_subcommand("train-personality",
                                   "cross-validate and train the trait regressor");
  add_common(train, train_o);
  train->add_option("--graphs", graphs_dir, "graph directory (default: <out>/graphs)");
  train->add_option("--labels", labels_file, "labels CSV (default: <out>/data/labels.csv)");
  auto* eval = app.add_subcommand("evaluate", "evaluate a trained model on graphs");
  add_common(eval, eval_o);
  eval->add_option("--model", model_path, "model checkpoint (default: <out>/model/model.json)");
  eval->add_option("--graphs", graphs_dir, "graph directory");
  eval->add_option("--labels", labels_file, "labels CSV");
  auto* pipe = app.add_subcommand("pipeline", "run every stage in order");
  add_common(pipe, pipe_o);
  auto* val = app.add_subcommand("validate-config", "schema-check a configuration file");
  add_common(val, val_o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      report(Pipeline(load(synth_o)).synth_data());
    } else if (prep->parsed()) {
      report(Pipeline(load(prep_o)).preprocess());
    } else if (search->parsed()) {
      report(Pipeline(load(search_o)).search(subject_filter));
    } else if (encode->parsed()) {
      report(Pipeline(load(encode_o)).encode_graphs());
    } else if (train->parsed()) {
      report(Pipeline(load(train_o)).train_personality(graphs_dir, labels_file));
    } else if (eval->parsed()) {
      report(Pipeline(load(eval_o)).evaluate(model_path, graphs_dir, labels_file));
    } else if (pipe->parsed()) {
      auto manifest = Pipeline(load(pipe_o)).run_all();
      for (const auto& rec : manifest.stages) report(rec);
    } else if (val->parsed()) {
      load(val_o);
      std::cout << "configuration ok\n";
    }
  } catch (const ConfigValidationError& ex) {
    std::cerr << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
