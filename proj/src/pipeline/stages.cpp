#include "percog/pipeline/stages.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "percog/archgraph/align.hpp"
#include "percog/archgraph/graph.hpp"
#include "percog/hash.hpp"
#include "percog/ingest/landmarks.hpp"
#include "percog/ingest/logmel.hpp"
#include "percog/ingest/synth.hpp"
#include "percog/ingest/windows.hpp"
#include "percog/npy.hpp"
#include "percog/wav.hpp"

namespace percog::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct StagePlan {
  std::string name;
  std::string config_subtree;        // serialized relevant config
  std::vector<std::string> inputs;   // existing files
  std::vector<std::string> outputs;  // expected files
};

std::map<std::string, std::string> hash_files(const std::vector<std::string>& paths) {
  std::map<std::string, std::string> out;
  for (const auto& p : paths) out[p] = hash_file(p);
  return out;
}

std::string plan_signature(const StagePlan& plan,
                           const std::map<std::string, std::string>& input_hashes) {
  std::string blob = plan.config_subtree;
  for (const auto& [p, h] : input_hashes) blob += "\n" + p + "=" + h;
  return hash_string(blob);
}

std::string stamp_path(const std::string& root, const std::string& stage) {
  return (fs::path(root) / (stage + ".stamp.json")).string();
}

bool stage_is_fresh(const std::string& root, const StagePlan& plan,
                    const std::string& signature) {
  std::ifstream f(stamp_path(root, plan.name));
  if (!f) return false;
  json doc;
  try {
    doc = json::parse(f);
  } catch (...) {
    return false;
  }
  if (doc.value("signature", "") != signature) return false;
  for (const auto& out : plan.outputs)
    if (!fs::exists(out)) return false;
  return true;
}

void write_stamp(const std::string& root, const StagePlan& plan,
                 const std::string& signature) {
  json doc{{"signature", signature}};
  std::ofstream f(stamp_path(root, plan.name));
  f << doc.dump(2);
}

// Runs a stage body with caching + manifest bookkeeping.
template <typename Body>
StageRecord run_stage(const std::string& root, const StagePlan& plan, Body&& body) {
  StageRecord rec;
  rec.name = plan.name;
  rec.started = iso_timestamp();
  auto input_hashes = hash_files(plan.inputs);
  rec.inputs = input_hashes;
  rec.signature = plan_signature(plan, input_hashes);
  if (stage_is_fresh(root, plan, rec.signature)) {
    rec.status = "skipped";
  } else {
    body();
    write_stamp(root, plan, rec.signature);
  }
  for (const auto& out : plan.outputs)
    if (fs::exists(out)) rec.outputs[out] = hash_file(out);
  rec.finished = iso_timestamp();
  return rec;
}

void parallel_over(int workers, int n, const std::function<void(int)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::mutex err_mutex;
  std::exception_ptr first_error;
  for (int w = 0; w < std::min(workers, n); ++w)
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string subject_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%03d", i);
  return buf;
}

json subtree(const ExperimentConfig& cfg, std::initializer_list<const char*> groups) {
  json full = json::parse(config_to_json(cfg));
  json out = json::object();
  out["seed"] = cfg.seed;
  for (const char* g : groups) out[g] = full.at(g);
  return out;
}

Tensor windows_to_tensor_audio(const std::vector<ingest::DyadWindow>& ws) {
  Tensor t({static_cast<int>(ws.size()), ingest::kInputFrames, 64});
  std::size_t off = 0;
  for (const auto& w : ws) {
    std::copy(w.speaker_audio.v.begin(), w.speaker_audio.v.end(), t.v.begin() + off);
    off += w.speaker_audio.v.size();
  }
  return t;
}

Tensor windows_to_tensor_lm(const std::vector<ingest::DyadWindow>& ws, bool listener) {
  int frames = listener ? ingest::kCandidateFrames : ingest::kInputFrames;
  Tensor t({static_cast<int>(ws.size()), frames, 68, 2});
  std::size_t off = 0;
  for (const auto& w : ws) {
    const Tensor& src = listener ? w.listener_gt : w.speaker_landmarks;
    std::copy(src.v.begin(), src.v.end(), t.v.begin() + off);
    off += src.v.size();
  }
  return t;
}

std::vector<ingest::DyadWindow> tensors_to_windows(const Tensor& audio, const Tensor& lm,
                                                   const Tensor& gt,
                                                   const std::vector<int>& starts) {
  std::vector<ingest::DyadWindow> ws;
  int n = audio.dim(0);
  for (int i = 0; i < n; ++i) {
    ingest::DyadWindow w;
    w.start_frame = starts[static_cast<std::size_t>(i)];
    w.speaker_audio = Tensor({ingest::kInputFrames, 64});
    std::copy(audio.v.begin() + static_cast<std::ptrdiff_t>(i) * w.speaker_audio.numel(),
              audio.v.begin() + static_cast<std::ptrdiff_t>(i + 1) * w.speaker_audio.numel(),
              w.speaker_audio.v.begin());
    w.speaker_landmarks = Tensor({ingest::kInputFrames, 68, 2});
    std::copy(lm.v.begin() + static_cast<std::ptrdiff_t>(i) * w.speaker_landmarks.numel(),
              lm.v.begin() + static_cast<std::ptrdiff_t>(i + 1) * w.speaker_landmarks.numel(),
              w.speaker_landmarks.v.begin());
    w.listener_gt = Tensor({ingest::kCandidateFrames, 68, 2});
    std::copy(gt.v.begin() + static_cast<std::ptrdiff_t>(i) * w.listener_gt.numel(),
              gt.v.begin() + static_cast<std::ptrdiff_t>(i + 1) * w.listener_gt.numel(),
              w.listener_gt.v.begin());
    ws.push_back(std::move(w));
  }
  return ws;
}

}  // namespace

Pipeline::Pipeline(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
  root_ = cfg_.out_root;
  fs::create_directories(root_);
  config_hash_ = hash_string(config_to_json(cfg_));
}

std::vector<std::string> Pipeline::subjects() const {
  std::vector<std::string> out;
  fs::path data = fs::path(root_) / "data";
  if (!fs::exists(data)) return out;
  for (const auto& e : fs::directory_iterator(data)) {
    std::string name = e.path().filename().string();
    const std::string suffix = "_speaker_landmarks.npy";
    if (name.size() > suffix.size() &&
        name.substr(name.size() - suffix.size()) == suffix)
      out.push_back(name.substr(0, name.size() - suffix.size()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

StageRecord Pipeline::synth_data() {
  fs::path data = fs::path(root_) / "data";
  StagePlan plan;
  plan.name = "synth-data";
  plan.config_subtree = subtree(cfg_, {"dataset"}).dump();
  for (int i = 0; i < cfg_.dataset.n_subjects; ++i) {
    std::string s = subject_name(i);
    plan.outputs.push_back((data / (s + "_speaker_audio.npy")).string());
    plan.outputs.push_back((data / (s + "_speaker_landmarks.npy")).string());
    plan.outputs.push_back((data / (s + "_listener_landmarks.npy")).string());
  }
  plan.outputs.push_back((data / "labels.csv").string());
  plan.outputs.push_back((data / "meta.json").string());

  return run_stage(root_, plan, [&] {
    fs::create_directories(data);
    std::vector<std::pair<std::string, std::array<double, 5>>> labels;
    json meta{{"frame_rate", cfg_.dataset.frame_rate}, {"subjects", json::array()}};
    for (int i = 0; i < cfg_.dataset.n_subjects; ++i) {
      std::string s = subject_name(i);
      std::uint64_t seed =
          Rng(cfg_.seed).derive("synth-subject", static_cast<std::uint64_t>(i)).next_u64();
      ingest::SynthConfig scfg;
      scfg.clip_frames = cfg_.dataset.clip_frames;
      scfg.frame_rate = cfg_.dataset.frame_rate;
      scfg.noise_sigma = cfg_.dataset.noise_sigma;
      scfg.map_mode = cfg_.dataset.map_mode == "identity"
                          ? ingest::SynthConfig::MapMode::identity
                          : ingest::SynthConfig::MapMode::subject;
      scfg.delay = cfg_.dataset.delay >= 0
                       ? cfg_.dataset.delay
                       : static_cast<int>(Rng(seed).derive("delay").uniform_int(
                             ingest::kMaxDelay + 1));
      ingest::SynthDyad dyad = ingest::synth_dyad(scfg, seed);
      npy_write((data / (s + "_speaker_audio.npy")).string(), dyad.speaker_audio, false);
      npy_write((data / (s + "_speaker_landmarks.npy")).string(), dyad.speaker_landmarks,
                false);
      npy_write((data / (s + "_listener_landmarks.npy")).string(),
                dyad.listener_landmarks, false);
      labels.emplace_back(s, dyad.traits);
      meta["subjects"].push_back(json{{"id", s},
                                      {"seed", seed},
                                      {"injected_delay", dyad.injected_delay},
                                      {"map_params", dyad.map_params}});
    }
    write_labels((data / "labels.csv").string(), labels);
    std::ofstream f((data / "meta.json").string());
    f << meta.dump(2);
  });
}

StageRecord Pipeline::preprocess() {
  fs::path data = cfg_.dataset.mode == "files" ? fs::path(cfg_.dataset.path)
                                               : fs::path(root_) / "data";
  fs::path wdir = fs::path(root_) / "windows";

  std::vector<std::string> subs;
  if (cfg_.dataset.mode == "files") {
    for (const auto& e : fs::directory_iterator(data)) {
      std::string name = e.path().filename().string();
      const std::string suffix = "_speaker_landmarks.npy";
      if (name.size() > suffix.size() &&
          name.substr(name.size() - suffix.size()) == suffix)
        subs.push_back(name.substr(0, name.size() - suffix.size()));
    }
    std::sort(subs.begin(), subs.end());
  } else {
    for (int i = 0; i < cfg_.dataset.n_subjects; ++i) subs.push_back(subject_name(i));
  }

  StagePlan plan;
  plan.name = "preprocess";
  plan.config_subtree = subtree(cfg_, {"ingest"}).dump();
  for (const auto& s : subs) {
    plan.inputs.push_back((data / (s + "_speaker_landmarks.npy")).string());
    plan.inputs.push_back((data / (s + "_listener_landmarks.npy")).string());
    std::string wav = (data / (s + "_speaker_audio.wav")).string();
    plan.inputs.push_back(fs::exists(wav) ? wav
                                          : (data / (s + "_speaker_audio.npy")).string());
    plan.outputs.push_back((wdir / s / "speaker_audio.npy").string());
    plan.outputs.push_back((wdir / s / "speaker_landmarks.npy").string());
    plan.outputs.push_back((wdir / s / "listener_gt.npy").string());
    plan.outputs.push_back((wdir / s / "meta.json").string());
  }

  return run_stage(root_, plan, [&] {
    const auto& tpl = ingest::MeanFaceTemplate::standard();
    for (const auto& s : subs) {
      Tensor sp_lm = npy_read((data / (s + "_speaker_landmarks.npy")).string());
      Tensor li_lm = npy_read((data / (s + "_listener_landmarks.npy")).string());
      auto sp_norm = ingest::normalize_landmarks(sp_lm, tpl, cfg_.dataset.frame_rate);
      auto li_norm = ingest::normalize_landmarks(li_lm, tpl, cfg_.dataset.frame_rate);

      Tensor audio;
      std::string wav_path = (data / (s + "_speaker_audio.wav")).string();
      if (fs::exists(wav_path)) {
        Waveform wave = wav_read(wav_path);
        auto mel = ingest::compute_logmel(wave.samples, wave.sample_rate,
                                          cfg_.dataset.frame_rate, sp_lm.dim(0));
        audio = ingest::standardize(mel).bins;
      } else {
        ingest::MelSpectrogram feats;
        feats.bins = npy_read((data / (s + "_speaker_audio.npy")).string());
        audio = ingest::standardize(feats).bins;
      }

      auto res = ingest::window_dyad(audio, sp_norm.seq.points, li_norm.seq.points,
                                     cfg_.ingest.window_start, cfg_.ingest.window_stride);
      fs::create_directories(wdir / s);
      npy_write((wdir / s / "speaker_audio.npy").string(),
                windows_to_tensor_audio(res.windows), false);
      npy_write((wdir / s / "speaker_landmarks.npy").string(),
                windows_to_tensor_lm(res.windows, false), false);
      npy_write((wdir / s / "listener_gt.npy").string(),
                windows_to_tensor_lm(res.windows, true), false);
      json meta{{"subject", s},
                {"window_count", res.windows.size()},
                {"too_short", res.too_short},
                {"interpolated_speaker_frames", sp_norm.interpolated_frames},
                {"interpolated_listener_frames", li_norm.interpolated_frames},
                {"starts", json::array()}};
      for (const auto& w : res.windows) meta["starts"].push_back(w.start_frame);
      std::ofstream f((wdir / s / "meta.json").string());
      f << meta.dump(2);
    }
    if (cfg_.dataset.mode == "files") {
      // labels travel with the input set; copy them into the run tree
      fs::create_directories(fs::path(root_) / "data");
      fs::copy_file(data / "labels.csv", fs::path(root_) / "data" / "labels.csv",
                    fs::copy_options::overwrite_existing);
    }
  });
}

namespace {

nas::SubjectWindows load_subject_windows(const fs::path& wdir, const std::string& s) {
  nas::SubjectWindows sw;
  sw.subject_id = s;
  json meta;
  {
    std::ifstream f((wdir / s / "meta.json").string());
    if (!f) throw std::runtime_error("missing window metadata for subject " + s);
    meta = json::parse(f);
  }
  if (meta.value("too_short", false)) return sw;
  std::vector<int> starts = meta.at("starts").get<std::vector<int>>();
  Tensor audio = npy_read((wdir / s / "speaker_audio.npy").string());
  Tensor lm = npy_read((wdir / s / "speaker_landmarks.npy").string());
  Tensor gt = npy_read((wdir / s / "listener_gt.npy").string());
  sw.windows = tensors_to_windows(audio, lm, gt, starts);
  return sw;
}

}  // namespace

StageRecord Pipeline::search(const std::string& subject_filter) {
  fs::path wdir = fs::path(root_) / "windows";
  fs::path sdir = fs::path(root_) / "search";
  std::vector<std::string> subs = subjects();
  if (!subject_filter.empty()) {
    subs.erase(std::remove_if(subs.begin(), subs.end(),
                              [&](const std::string& s) { return s != subject_filter; }),
               subs.end());
    if (subs.empty())
      throw nas::ConfigError("search: unknown subject " + subject_filter);
  }

  StagePlan plan;
  plan.name = subject_filter.empty() ? "search" : "search-" + subject_filter;
  plan.config_subtree = subtree(cfg_, {"search_space", "nas"}).dump();
  for (const auto& s : subs) {
    plan.inputs.push_back((wdir / s / "speaker_audio.npy").string());
    plan.inputs.push_back((wdir / s / "speaker_landmarks.npy").string());
    plan.inputs.push_back((wdir / s / "listener_gt.npy").string());
    plan.outputs.push_back((sdir / ("subject_" + s + ".ckpt.json")).string());
    plan.outputs.push_back((sdir / ("subject_" + s + ".curve.csv")).string());
  }

  return run_stage(root_, plan, [&] {
    fs::create_directories(sdir);
    parallel_over(cfg_.nas.workers, static_cast<int>(subs.size()), [&](int i) {
      nas::SubjectWindows sw = load_subject_windows(wdir, subs[static_cast<std::size_t>(i)]);
      if (sw.windows.empty()) return;  // too-short clip: warned at preprocess
      nas::run_search(cfg_.net_spec(), sw, cfg_.search_config(), sdir.string(),
                      config_hash_);
    });
  });
}

StageRecord Pipeline::encode_graphs() {
  fs::path sdir = fs::path(root_) / "search";
  fs::path wdir = fs::path(root_) / "windows";
  fs::path gdir = fs::path(root_) / "graphs";
  std::vector<std::string> subs = subjects();

  StagePlan plan;
  plan.name = "encode-graph";
  plan.config_subtree = subtree(cfg_, {"graph"}).dump();
  for (const auto& s : subs) {
    std::string ckpt = (sdir / ("subject_" + s + ".ckpt.json")).string();
    if (fs::exists(ckpt)) plan.inputs.push_back(ckpt);
  }
  for (const auto& s : subs)
    plan.outputs.push_back((gdir / (s + ".graph.json")).string());

  return run_stage(root_, plan, [&] {
    fs::create_directories(gdir);
    const std::string alignment = cfg_.graph.alignment;
    parallel_over(cfg_.nas.workers, static_cast<int>(subs.size()), [&](int i) {
      const std::string& s = subs[static_cast<std::size_t>(i)];
      std::string ckpt = (sdir / ("subject_" + s + ".ckpt.json")).string();
      if (!fs::exists(ckpt)) return;
      nas::LoadedCheckpoint loaded;
      if (alignment == "block_max") {
        std::string aligned = (gdir / (s + ".aligned.ckpt.json")).string();
        archgraph::align_block_max_file(ckpt, aligned);
        loaded = nas::load_checkpoint(aligned, /*allow_encoding_only=*/true);
      } else if (alignment == "distill") {
        std::string aligned = (gdir / (s + ".aligned.ckpt.json")).string();
        nas::SubjectWindows sw = load_subject_windows(wdir, s);
        archgraph::align_block_distill(ckpt, sw, cfg_.distill_config(), aligned);
        loaded = nas::load_checkpoint(aligned);
      } else if (alignment == "fixed_depth_search") {
        nas::SubjectWindows sw = load_subject_windows(wdir, s);
        nas::NetSpec spec = cfg_.net_spec();
        if (cfg_.graph.distill_target_depth > 0)
          spec.n_reg = cfg_.graph.distill_target_depth;
        nas::SearchConfig scfg = cfg_.search_config();
        scfg.depth_search = false;
        fs::path fdir = gdir / "fixed_depth";
        fs::create_directories(fdir);
        auto run = nas::run_search(spec, sw, scfg, fdir.string(), config_hash_);
        loaded = nas::load_checkpoint(run.checkpoint_path);
      } else {
        loaded = nas::load_checkpoint(ckpt);
      }
      auto g = archgraph::build_graph(loaded.net, s, alignment, cfg_.lw_mode(),
                                      cfg_.graph.hist_bins);
      archgraph::save_graph((gdir / (s + ".graph.json")).string(), g);
    });
  });
}

namespace {

std::vector<gnn::GraphSample> load_graph_samples(const std::string& graphs_dir,
                                                 const std::string& labels_file) {
  auto labels = read_labels(labels_file);
  std::vector<gnn::GraphSample> out;
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(graphs_dir)) {
    std::string name = e.path().filename().string();
    if (name.size() > 11 && name.substr(name.size() - 11) == ".graph.json")
      files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    gnn::GraphSample s;
    s.graph = archgraph::load_graph(f);
    s.subject_id = s.graph.subject_id;
    auto it = labels.find(s.subject_id);
    if (it == labels.end())
      throw nas::ConfigError("no label row for subject " + s.subject_id + " in " +
                             labels_file);
    s.labels = it->second;
    out.push_back(std::move(s));
  }
  return out;
}

bool graphs_heterogeneous(const std::vector<gnn::GraphSample>& samples) {
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (archgraph::census(samples[i].graph) != archgraph::census(samples[0].graph))
      return true;
  return false;
}

}  // namespace

StageRecord Pipeline::train_personality(std::string graphs_dir, std::string labels_file) {
  if (graphs_dir.empty()) graphs_dir = (fs::path(root_) / "graphs").string();
  if (labels_file.empty()) labels_file = (fs::path(root_) / "data" / "labels.csv").string();
  fs::path mdir = fs::path(root_) / "model";
  fs::path xdir = fs::path(root_) / "metrics";

  StagePlan plan;
  plan.name = "train-personality";
  plan.config_subtree = subtree(cfg_, {"vertex", "edge", "regressor"}).dump();
  for (const auto& e : fs::directory_iterator(graphs_dir)) {
    std::string name = e.path().filename().string();
    if (name.size() > 11 && name.substr(name.size() - 11) == ".graph.json")
      plan.inputs.push_back(e.path().string());
  }
  std::sort(plan.inputs.begin(), plan.inputs.end());
  if (fs::exists(labels_file)) plan.inputs.push_back(labels_file);
  plan.outputs.push_back((mdir / "model.json").string());
  plan.outputs.push_back((xdir / "cv_metrics.json").string());
  plan.outputs.push_back((xdir / "train_curve.csv").string());

  return run_stage(root_, plan, [&] {
    auto samples = load_graph_samples(graphs_dir, labels_file);
    if (samples.empty()) throw nas::ConfigError("train-personality: no graphs found");
    bool hetero = graphs_heterogeneous(samples);
    gnn::TrainConfig tc = cfg_.train_config(hetero);

    gnn::CvConfig cv;
    cv.folds = cfg_.regressor.folds;
    cv.loso = cfg_.regressor.loso;
    cv.fold_seed = cfg_.seed;
    gnn::CvResult res = gnn::cross_validate(samples, tc, cv);

    fs::create_directories(xdir);
    json jm{{"pcc", res.pcc},
            {"acc", res.acc},
            {"pooled", res.pooled},
            {"folds", res.per_fold.size()},
            {"heterogeneous", hetero},
            {"traits", {"Ope", "Con", "Ext", "Agr", "Neu"}}};
    {
      std::ofstream f((xdir / "cv_metrics.json").string());
      f << jm.dump(2);
    }

    // final model on the full training set
    gnn::TrainedModel model = gnn::make_model(samples.front().graph, tc);
    std::vector<gnn::TrainCurvePoint> curve;
    gnn::train_regressor(model, samples, &curve);
    fs::create_directories(mdir);
    gnn::save_model((mdir / "model.json").string(), model);
    {
      std::ofstream f((xdir / "train_curve.csv").string());
      f << "epoch,mse\n";
      for (const auto& p : curve) f << p.epoch << "," << p.mse << "\n";
    }
  });
}

StageRecord Pipeline::evaluate(std::string model_path, std::string graphs_dir,
                               std::string labels_file) {
  if (model_path.empty()) model_path = (fs::path(root_) / "model" / "model.json").string();
  if (graphs_dir.empty()) graphs_dir = (fs::path(root_) / "graphs").string();
  if (labels_file.empty()) labels_file = (fs::path(root_) / "data" / "labels.csv").string();
  fs::path xdir = fs::path(root_) / "metrics";

  StagePlan plan;
  plan.name = "evaluate";
  plan.config_subtree = "{}";
  plan.inputs.push_back(model_path);
  for (const auto& e : fs::directory_iterator(graphs_dir)) {
    std::string name = e.path().filename().string();
    if (name.size() > 11 && name.substr(name.size() - 11) == ".graph.json")
      plan.inputs.push_back(e.path().string());
  }
  std::sort(plan.inputs.begin() + 1, plan.inputs.end());
  if (fs::exists(labels_file)) plan.inputs.push_back(labels_file);
  plan.outputs.push_back((xdir / "eval.json").string());
  plan.outputs.push_back((xdir / "predictions.csv").string());

  return run_stage(root_, plan, [&] {
    auto samples = load_graph_samples(graphs_dir, labels_file);
    gnn::TrainedModel model = gnn::load_model(model_path);
    fs::create_directories(xdir);
    std::array<std::vector<double>, 5> preds, trues;
    {
      std::ofstream f((xdir / "predictions.csv").string());
      f << "subject_id,ope,con,ext,agr,neu\n";
      for (const auto& s : samples) {
        auto p = model.predict(s.graph);
        f << s.subject_id;
        for (int t = 0; t < 5; ++t) {
          f << "," << p[static_cast<std::size_t>(t)];
          preds[static_cast<std::size_t>(t)].push_back(p[static_cast<std::size_t>(t)]);
          trues[static_cast<std::size_t>(t)].push_back(s.labels[static_cast<std::size_t>(t)]);
        }
        f << "\n";
      }
    }
    json out{{"traits", {"Ope", "Con", "Ext", "Agr", "Neu"}}};
    std::array<double, 5> accs{};
    for (int t = 0; t < 5; ++t)
      accs[static_cast<std::size_t>(t)] =
          gnn::acc(preds[static_cast<std::size_t>(t)], trues[static_cast<std::size_t>(t)]);
    out["acc"] = accs;
    if (samples.size() >= 2) {
      std::array<double, 5> pccs{};
      for (int t = 0; t < 5; ++t)
        pccs[static_cast<std::size_t>(t)] =
            gnn::pcc(preds[static_cast<std::size_t>(t)], trues[static_cast<std::size_t>(t)]);
      out["pcc"] = pccs;
    }
    std::ofstream f((xdir / "eval.json").string());
    f << out.dump(2);
  });
}

RunManifest Pipeline::run_all() {
  RunManifest m;
  m.config_hash = config_hash_;
  m.code_version = kCodeVersion;
  std::string manifest_path = (fs::path(root_) / "run_manifest.json").string();
  auto push_and_save = [&](StageRecord rec) {
    m.stages.push_back(std::move(rec));
    save_manifest(manifest_path, m);
  };
  try {
    if (cfg_.dataset.mode == "synthetic") push_and_save(synth_data());
    push_and_save(preprocess());
    push_and_save(search());
    push_and_save(encode_graphs());
    push_and_save(train_personality());
    push_and_save(evaluate());
  } catch (const std::exception& ex) {
    StageRecord rec;
    rec.name = "failure";
    rec.status = "failed";
    rec.finished = iso_timestamp();
    rec.inputs["error"] = ex.what();
    m.stages.push_back(std::move(rec));
    save_manifest(manifest_path, m);
    throw;
  }
  return m;
}

std::map<std::string, std::array<double, 5>> read_labels(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_labels: cannot open " + path);
  std::map<std::string, std::array<double, 5>> out;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.find("subject") != std::string::npos) continue;  // header
    }
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> cols;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
    if (cols.size() != 6)
      throw std::runtime_error("read_labels: malformed row in " + path + ": " + line);
    std::array<double, 5> vals{};
    for (int i = 0; i < 5; ++i) vals[static_cast<std::size_t>(i)] = std::stod(cols[static_cast<std::size_t>(i) + 1]);
    out[cols[0]] = vals;
  }
  return out;
}

void write_labels(const std::string& path,
                  const std::vector<std::pair<std::string, std::array<double, 5>>>& rows) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_labels: cannot open " + path);
  f << "subject_id,ope,con,ext,agr,neu\n";
  f.precision(17);
  for (const auto& [id, vals] : rows) {
    f << id;
    for (double v : vals) f << "," << v;
    f << "\n";
  }
}

}  // namespace percog::pipeline
