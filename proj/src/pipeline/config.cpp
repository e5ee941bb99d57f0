#include "percog/pipeline/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace percog::pipeline {

using nlohmann::json;

ConfigValidationError::ConfigValidationError(std::vector<ConfigViolation> v)
    : std::runtime_error([&v] {
        std::ostringstream os;
        os << "configuration invalid (" << v.size() << " violation"
           << (v.size() == 1 ? "" : "s") << "):";
        for (const auto& x : v) os << "\n  " << x.path << ": " << x.message;
        return os.str();
      }()),
      violations(std::move(v)) {}

namespace {

/// Schema walker: reads typed keys out of a JSON object, recording every
/// violation and every visited key so unknown keys can be rejected.
class Group {
 public:
  Group(const json& j, std::string prefix, std::vector<ConfigViolation>& out)
      : j_(j), prefix_(std::move(prefix)), out_(out) {}

  ~Group() {
    if (!j_.is_object()) return;
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key))
        out_.push_back({path(key), "unknown key"});
  }

  const json* sub(const std::string& key) {
    seen_.insert(key);
    if (!j_.is_object() || !j_.contains(key)) return nullptr;
    if (!j_.at(key).is_object()) {
      out_.push_back({path(key), "expected an object"});
      return nullptr;
    }
    return &j_.at(key);
  }

  void integer(const std::string& key, int& dst, long lo, long hi) {
    seen_.insert(key);
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) {
      out_.push_back({path(key), "expected an integer"});
      return;
    }
    long x = v.get<long>();
    if (x < lo || x > hi) {
      out_.push_back({path(key), "must lie in [" + std::to_string(lo) + ", " +
                                      std::to_string(hi) + "]"});
      return;
    }
    dst = static_cast<int>(x);
  }

  void u64(const std::string& key, std::uint64_t& dst) {
    seen_.insert(key);
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned() && !v.is_number_integer()) {
      out_.push_back({path(key), "expected an unsigned integer"});
      return;
    }
    dst = v.get<std::uint64_t>();
  }

  void real(const std::string& key, double& dst, double lo, double hi) {
    seen_.insert(key);
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) {
      out_.push_back({path(key), "expected a number"});
      return;
    }
    double x = v.get<double>();
    if (x < lo || x > hi) {
      std::ostringstream os;
      os << "must lie in [" << lo << ", " << hi << "]";
      out_.push_back({path(key), os.str()});
      return;
    }
    dst = x;
  }

  void boolean(const std::string& key, bool& dst) {
    seen_.insert(key);
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_boolean()) {
      out_.push_back({path(key), "expected a boolean"});
      return;
    }
    dst = v.get<bool>();
  }

  void text(const std::string& key, std::string& dst) {
    seen_.insert(key);
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_string()) {
      out_.push_back({path(key), "expected a string"});
      return;
    }
    dst = v.get<std::string>();
  }

  void enumerated(const std::string& key, std::string& dst,
                  const std::vector<std::string>& allowed) {
    seen_.insert(key);
    if (!has(key)) return;
    const json& v = j_.at(key);
    std::string joined;
    for (const auto& a : allowed) joined += (joined.empty() ? "" : "|") + a;
    if (!v.is_string()) {
      out_.push_back({path(key), "expected one of " + joined});
      return;
    }
    std::string x = v.get<std::string>();
    for (const auto& a : allowed)
      if (x == a) {
        dst = x;
        return;
      }
    out_.push_back({path(key), "\"" + x + "\" is not allowed; expected one of " + joined});
  }

  void int_array3(const std::string& key, std::array<int, 3>& dst) {
    seen_.insert(key);
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != 3) {
      out_.push_back({path(key), "expected an array of 3 integers"});
      return;
    }
    for (int i = 0; i < 3; ++i) {
      if (!v[static_cast<std::size_t>(i)].is_number_integer() ||
          v[static_cast<std::size_t>(i)].get<long>() < 1) {
        out_.push_back({path(key), "entries must be positive integers"});
        return;
      }
    }
    for (int i = 0; i < 3; ++i)
      dst[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)].get<int>();
  }

  void op_list(const std::string& key, std::vector<std::string>& dst) {
    seen_.insert(key);
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array()) {
      out_.push_back({path(key), "expected an array of operation names"});
      return;
    }
    std::vector<std::string> names;
    for (const auto& e : v) {
      if (!e.is_string()) {
        out_.push_back({path(key), "entries must be operation-name strings"});
        return;
      }
      try {
        nas::op_from_name(e.get<std::string>());
      } catch (const std::exception&) {
        out_.push_back({path(key), "unknown operation \"" + e.get<std::string>() + "\""});
        return;
      }
      names.push_back(e.get<std::string>());
    }
    dst = std::move(names);
  }

 private:
  bool has(const std::string& key) const {
    return j_.is_object() && j_.contains(key);
  }
  std::string path(const std::string& key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

  const json& j_;
  std::string prefix_;
  std::vector<ConfigViolation>& out_;
  std::set<std::string> seen_;
};

const json kEmpty = json::object();

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const std::exception& ex) {
    throw ConfigValidationError(std::vector<ConfigViolation>{{"", std::string("not valid JSON: ") + ex.what()}});
  }
  if (!doc.is_object())
    throw ConfigValidationError(std::vector<ConfigViolation>{{"", "the document root must be an object"}});

  ExperimentConfig cfg;
  std::vector<ConfigViolation> violations;
  {
    Group root(doc, "", violations);
    root.u64("seed", cfg.seed);
    root.text("out_root", cfg.out_root);

    if (const json* d = root.sub("dataset")) {
      Group g(*d, "dataset", violations);
      g.enumerated("mode", cfg.dataset.mode, {"synthetic", "files"});
      g.text("path", cfg.dataset.path);
      g.integer("n_subjects", cfg.dataset.n_subjects, 1, 100000);
      g.integer("clip_frames", cfg.dataset.clip_frames, ingest::kCandidateFrames, 10000000);
      g.real("frame_rate", cfg.dataset.frame_rate, 1.0, 1000.0);
      g.integer("delay", cfg.dataset.delay, -1, ingest::kMaxDelay);
      g.real("noise_sigma", cfg.dataset.noise_sigma, 0.0, 1.0);
      g.enumerated("map_mode", cfg.dataset.map_mode, {"identity", "subject"});
    }
    if (const json* d = root.sub("ingest")) {
      Group g(*d, "ingest", violations);
      g.integer("window_stride", cfg.ingest.window_stride, 1, 100000);
      g.integer("window_start", cfg.ingest.window_start, 0, 100000);
    }
    if (const json* d = root.sub("search_space")) {
      Group g(*d, "search_space", violations);
      g.integer("n_nodes", cfg.search_space.n_nodes, 1, 8);
      g.integer("n_reg", cfg.search_space.n_reg, 1, 8);
      g.int_array3("channels", cfg.search_space.channels);
      g.integer("stem_channels", cfg.search_space.stem_channels, 1, 4096);
      g.integer("lstm_hidden", cfg.search_space.lstm_hidden, 1, 4096);
      g.integer("decoder_channels", cfg.search_space.decoder_channels, 0, 4096);
      g.enumerated("param_mode", cfg.search_space.param_mode, {"ip", "ps"});
      g.enumerated("modality", cfg.search_space.modality,
                   {"audio_face", "face", "face_sentence"});
      g.op_list("validity_regular", cfg.search_space.validity_regular);
      g.op_list("validity_down", cfg.search_space.validity_down);
      g.op_list("validity_up", cfg.search_space.validity_up);
    }
    if (const json* d = root.sub("nas")) {
      Group g(*d, "nas", violations);
      g.integer("max_epochs", cfg.nas.max_epochs, 0, 1000000);
      g.integer("batch_size", cfg.nas.batch_size, 1, 100000);
      g.real("lr_alpha", cfg.nas.lr_alpha, 0.0, 10.0);
      g.real("lr_omega", cfg.nas.lr_omega, 0.0, 10.0);
      g.real("epsilon", cfg.nas.epsilon, 1e-12, 1e12);
      g.real("converge_rel", cfg.nas.converge_rel, 0.0, 1.0);
      g.integer("converge_window", cfg.nas.converge_window, 1, 100000);
      g.boolean("depth_search", cfg.nas.depth_search);
      g.real("depth_holdout", cfg.nas.depth_holdout, 0.0, 0.9);
      g.enumerated("mask_mode", cfg.nas.mask_mode, {"exclusive", "inclusive"});
      g.integer("workers", cfg.nas.workers, 1, 256);
    }
    if (const json* d = root.sub("graph")) {
      Group g(*d, "graph", violations);
      g.enumerated("lw_mode", cfg.graph.lw_mode, {"top5", "hist"});
      g.integer("hist_bins", cfg.graph.hist_bins, 2, 1000);
      g.enumerated("alignment", cfg.graph.alignment,
                   {"none", "block_max", "distill", "fixed_depth_search"});
      g.integer("distill_target_depth", cfg.graph.distill_target_depth, 0, 8);
      g.integer("distill_epoch_cap", cfg.graph.distill_epoch_cap, 0, 1000000);
      g.real("distill_tolerance", cfg.graph.distill_tolerance, 0.0, 10.0);
    }
    if (const json* d = root.sub("vertex")) {
      Group g(*d, "vertex", violations);
      g.enumerated("variant", cfg.vertex.variant,
                   {"op", "lw", "oplw_c", "oplw_w", "oplw_ven"});
    }
    if (const json* d = root.sub("edge")) {
      Group g(*d, "edge", violations);
      g.enumerated("mode", cfg.edge.mode, {"binary", "single_ern", "multi_ern"});
      g.integer("heads", cfg.edge.heads, 1, 64);
      g.integer("kernel_extent", cfg.edge.kernel_extent, 1, 31);
      g.integer("d_model", cfg.edge.d_model, 1, 1024);
      g.integer("conv_stride", cfg.edge.conv_stride, 1, 64);
    }
    if (const json* d = root.sub("regressor")) {
      Group g(*d, "regressor", violations);
      g.integer("epochs", cfg.regressor.epochs, 0, 1000000);
      g.integer("batch", cfg.regressor.batch, 1, 100000);
      g.real("lr", cfg.regressor.lr, 0.0, 10.0);
      g.real("weight_decay", cfg.regressor.weight_decay, 0.0, 10.0);
      g.real("dropout", cfg.regressor.dropout, 0.0, 0.99);
      g.integer("head_hidden", cfg.regressor.head_hidden, 1, 65536);
      g.integer("folds", cfg.regressor.folds, 2, 100000);
      g.boolean("loso", cfg.regressor.loso);
      g.enumerated("head", cfg.regressor.head, {"auto", "concat", "mean_pool"});
    }
  }

  // cross-key checks
  if (cfg.dataset.mode == "files" && cfg.dataset.path.empty())
    violations.push_back({"dataset.path", "required when dataset.mode is \"files\""});
  if (cfg.edge.d_model % cfg.edge.heads != 0)
    violations.push_back({"edge.d_model", "must be divisible by edge.heads"});
  try {
    ExperimentConfig probe = cfg;
    probe.net_spec().validate();
  } catch (const std::exception& ex) {
    violations.push_back({"search_space", ex.what()});
  }

  if (!violations.empty()) throw ConfigValidationError(std::move(violations));
  return cfg;
}

ExperimentConfig validate_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("validate_config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

nas::NetSpec ExperimentConfig::net_spec() const {
  nas::NetSpec s;
  s.n_nodes = search_space.n_nodes;
  s.n_reg = search_space.n_reg;
  s.channels = search_space.channels;
  s.stem_channels = search_space.stem_channels;
  s.lstm_hidden = search_space.lstm_hidden;
  s.decoder_channels = search_space.decoder_channels;
  s.param_mode = search_space.param_mode == "ps" ? nas::NetSpec::ParamMode::PS
                                                 : nas::NetSpec::ParamMode::IP;
  s.modality = search_space.modality == "face"            ? nas::NetSpec::Modality::Face
               : search_space.modality == "face_sentence" ? nas::NetSpec::Modality::FaceSentence
                                                          : nas::NetSpec::Modality::AudioFace;
  auto apply = [](const std::vector<std::string>& names, nas::ValidityMask& mask) {
    if (names.empty()) return;
    mask.fill(0);
    for (const auto& n : names)
      mask[static_cast<std::size_t>(nas::op_from_name(n))] = 1;
  };
  apply(search_space.validity_regular, s.validity.regular);
  apply(search_space.validity_down, s.validity.down);
  apply(search_space.validity_up, s.validity.up);
  s.init_seed = seed;
  return s;
}

nas::SearchConfig ExperimentConfig::search_config() const {
  nas::SearchConfig c;
  c.max_epochs = nas.max_epochs;
  c.batch_size = nas.batch_size;
  c.lr_alpha = nas.lr_alpha;
  c.lr_omega = nas.lr_omega;
  c.loss.epsilon = nas.epsilon;
  c.converge_rel = nas.converge_rel;
  c.converge_window = nas.converge_window;
  c.depth_search = nas.depth_search;
  c.depth_holdout = nas.depth_holdout;
  c.mask_mode = nas.mask_mode == "inclusive" ? nas::SearchConfig::MaskMode::Inclusive
                                             : nas::SearchConfig::MaskMode::Exclusive;
  c.seed = seed;
  return c;
}

gnn::TrainConfig ExperimentConfig::train_config(bool heterogeneous) const {
  gnn::TrainConfig c;
  c.variant = gnn::vertex_variant_from_name(vertex.variant);
  c.lw_mode = lw_mode();
  c.hist_bins = graph.hist_bins;
  c.edge_mode = gnn::edge_mode_from_name(edge.mode);
  c.ern.heads = edge.heads;
  c.ern.kernel_extent = edge.kernel_extent;
  c.ern.d_model = edge.d_model;
  c.ern.conv_stride = edge.conv_stride;
  c.gcn.dropout = regressor.dropout;
  c.gcn.head_hidden = regressor.head_hidden;
  bool mean_pool = regressor.head == "mean_pool" ||
                   (regressor.head == "auto" && heterogeneous);
  c.gcn.head = mean_pool ? gnn::GcnConfig::Head::MeanPool : gnn::GcnConfig::Head::Concat;
  c.epochs = regressor.epochs;
  c.batch = regressor.batch;
  c.lr = regressor.lr;
  c.weight_decay = regressor.weight_decay;
  c.seed = seed;
  return c;
}

archgraph::DistillConfig ExperimentConfig::distill_config() const {
  archgraph::DistillConfig c;
  c.target_depth = graph.distill_target_depth;
  c.epoch_cap = graph.distill_epoch_cap;
  c.tolerance = graph.distill_tolerance;
  c.lr = nas.lr_omega;
  c.loss.epsilon = nas.epsilon;
  c.seed = seed;
  return c;
}

archgraph::LwMode ExperimentConfig::lw_mode() const {
  return archgraph::lw_mode_from_name(graph.lw_mode);
}

std::string config_to_json(const ExperimentConfig& c) {
  json doc{
      {"seed", c.seed},
      {"out_root", c.out_root},
      {"dataset",
       {{"mode", c.dataset.mode},
        {"path", c.dataset.path},
        {"n_subjects", c.dataset.n_subjects},
        {"clip_frames", c.dataset.clip_frames},
        {"frame_rate", c.dataset.frame_rate},
        {"delay", c.dataset.delay},
        {"noise_sigma", c.dataset.noise_sigma},
        {"map_mode", c.dataset.map_mode}}},
      {"ingest",
       {{"window_stride", c.ingest.window_stride}, {"window_start", c.ingest.window_start}}},
      {"search_space",
       {{"n_nodes", c.search_space.n_nodes},
        {"n_reg", c.search_space.n_reg},
        {"channels", c.search_space.channels},
        {"stem_channels", c.search_space.stem_channels},
        {"lstm_hidden", c.search_space.lstm_hidden},
        {"decoder_channels", c.search_space.decoder_channels},
        {"param_mode", c.search_space.param_mode},
        {"modality", c.search_space.modality},
        {"validity_regular", c.search_space.validity_regular},
        {"validity_down", c.search_space.validity_down},
        {"validity_up", c.search_space.validity_up}}},
      {"nas",
       {{"max_epochs", c.nas.max_epochs},
        {"batch_size", c.nas.batch_size},
        {"lr_alpha", c.nas.lr_alpha},
        {"lr_omega", c.nas.lr_omega},
        {"epsilon", c.nas.epsilon},
        {"converge_rel", c.nas.converge_rel},
        {"converge_window", c.nas.converge_window},
        {"depth_search", c.nas.depth_search},
        {"depth_holdout", c.nas.depth_holdout},
        {"mask_mode", c.nas.mask_mode},
        {"workers", c.nas.workers}}},
      {"graph",
       {{"lw_mode", c.graph.lw_mode},
        {"hist_bins", c.graph.hist_bins},
        {"alignment", c.graph.alignment},
        {"distill_target_depth", c.graph.distill_target_depth},
        {"distill_epoch_cap", c.graph.distill_epoch_cap},
        {"distill_tolerance", c.graph.distill_tolerance}}},
      {"vertex", {{"variant", c.vertex.variant}}},
      {"edge",
       {{"mode", c.edge.mode},
        {"heads", c.edge.heads},
        {"kernel_extent", c.edge.kernel_extent},
        {"d_model", c.edge.d_model},
        {"conv_stride", c.edge.conv_stride}}},
      {"regressor",
       {{"epochs", c.regressor.epochs},
        {"batch", c.regressor.batch},
        {"lr", c.regressor.lr},
        {"weight_decay", c.regressor.weight_decay},
        {"dropout", c.regressor.dropout},
        {"head_hidden", c.regressor.head_hidden},
        {"folds", c.regressor.folds},
        {"loso", c.regressor.loso},
        {"head", c.regressor.head}}},
  };
  return doc.dump(2);
}

}  // namespace percog::pipeline
