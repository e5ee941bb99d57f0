#include "percog/nas/search.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "percog/hash.hpp"

namespace percog::nas {

namespace {

const Tensor* category_for(const CognitiveNet& net, Tensor& scratch) {
  if (net.spec.modality != NetSpec::Modality::FaceSentence) return nullptr;
  // windows carry no sentence-category stream; a neutral all-first-category
  // signal keeps the face+sentence topology runnable on dyad windows
  scratch = Tensor({80, 4});
  for (int t = 0; t < 80; ++t) scratch.at2(t, 0) = 1.0;
  return &scratch;
}

bool grads_finite(const std::vector<Var>& params) {
  for (const auto& p : params) {
    if (p->grad.v.empty()) continue;
    for (double g : p->grad.v)
      if (!std::isfinite(g)) return false;
  }
  return true;
}

double eval_mean_loss(const CognitiveNet& net,
                      const std::vector<const ingest::DyadWindow*>& windows,
                      const AdaptiveLossConfig& loss_cfg, int override_block = -1,
                      int override_depth = -1, std::vector<int>* taus = nullptr) {
  Tensor cat_scratch;
  const Tensor* cat = category_for(net, cat_scratch);
  double total = 0.0;
  for (const auto* w : windows) {
    Var pred = net.forward(w->speaker_audio, w->speaker_landmarks, cat, override_block,
                           override_depth);
    AdaptiveLossValue v =
        adaptive_loss_eval(channels_to_landmarks(pred->val), w->listener_gt, loss_cfg);
    total += v.loss;
    if (taus) taus->push_back(v.tau);
  }
  return total / static_cast<double>(windows.size());
}

int modal_tau(const std::vector<int>& taus) {
  std::array<int, 32> counts{};
  for (int t : taus)
    if (t >= 0 && t < 32) ++counts[static_cast<std::size_t>(t)];
  int best = 0;
  for (int t = 1; t < 32; ++t)
    if (counts[static_cast<std::size_t>(t)] > counts[static_cast<std::size_t>(best)])
      best = t;
  return best;
}

}  // namespace

StepStats search_step(SearchState& state, const std::vector<const ingest::DyadWindow*>& batch,
                      const SearchConfig& cfg) {
  if (batch.empty()) throw ConfigError("search_step: empty batch");
  StepStats stats;
  state.opt_alpha.zero_grad();
  state.opt_omega.zero_grad();

  Tensor cat_scratch;
  const Tensor* cat = category_for(state.net, cat_scratch);
  Var total;
  for (const auto* w : batch) {
    Var pred = state.net.forward(w->speaker_audio, w->speaker_landmarks, cat);
    auto [loss, tau] = adaptive_loss_var(pred, w->listener_gt, cfg.loss);
    stats.taus.push_back(tau);
    total = total ? add(total, loss) : loss;
  }
  Var mean_loss = scale(total, 1.0 / static_cast<double>(batch.size()));
  stats.mean_loss = value(mean_loss);
  backward(mean_loss);

  if (!grads_finite(state.opt_alpha.params()) || !grads_finite(state.opt_omega.params())) {
    state.opt_alpha.zero_grad();
    state.opt_omega.zero_grad();
    ++state.incidents;
    stats.skipped = true;
    std::cerr << "[percog] search step skipped: non-finite gradient (incident "
              << state.incidents << ")\n";
    return stats;
  }
  // both groups descend from gradients taken at the same point
  state.opt_omega.step();
  state.opt_alpha.step();
  state.opt_alpha.zero_grad();
  state.opt_omega.zero_grad();
  return stats;
}

DepthSearchResult search_depth(CognitiveNet& net,
                               const std::vector<const ingest::DyadWindow*>& eval_windows,
                               const SearchConfig& cfg, bool apply) {
  if (eval_windows.empty()) throw ConfigError("search_depth: no evaluation windows");
  DepthSearchResult res;
  for (int bi : net.depth_searchable_blocks()) {
    Block& b = net.blocks[static_cast<std::size_t>(bi)];
    DepthSearchResult::PerBlock pb;
    pb.block_name = b.name;
    pb.block_index = bi;
    pb.full_loss = eval_mean_loss(net, eval_windows, cfg.loss);
    int n = static_cast<int>(b.cells.size());
    int chosen = 1;
    double best_drop = -1e300;
    for (int m = 1; m <= n; ++m) {
      int survivors = cfg.mask_mode == SearchConfig::MaskMode::Exclusive ? m - 1 : m;
      double lm = eval_mean_loss(net, eval_windows, cfg.loss, bi, survivors);
      pb.masked_loss.push_back(lm);
      double drop = lm - pb.full_loss;
      pb.drop.push_back(drop);
      if (drop > best_drop) {
        best_drop = drop;
        chosen = m;
      }
    }
    pb.chosen_depth = chosen;
    if (apply) b.active_depth = chosen;
    res.blocks.push_back(std::move(pb));
  }
  return res;
}

RunSearchResult run_search(NetSpec netspec, const SubjectWindows& data,
                           const SearchConfig& cfg, const std::string& out_dir,
                           const std::string& config_hash) {
  if (data.windows.empty()) throw ConfigError("run_search: subject has no usable windows");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  // per-subject weight initialisation; operation parameters start uniform
  netspec.init_seed = fnv1a(data.subject_id, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  SearchState state(assemble_network(netspec), cfg);

  int n = static_cast<int>(data.windows.size());
  int n_hold = 0;
  if (cfg.depth_search && n >= 3)
    n_hold = std::max(1, static_cast<int>(std::floor(cfg.depth_holdout * n)));
  std::vector<const ingest::DyadWindow*> train, hold;
  for (int i = 0; i < n - n_hold; ++i) train.push_back(&data.windows[static_cast<std::size_t>(i)]);
  for (int i = n - n_hold; i < n; ++i) hold.push_back(&data.windows[static_cast<std::size_t>(i)]);

  RunSearchResult res;
  Rng shuffler = Rng(cfg.seed).derive("epoch-shuffle", fnv1a(data.subject_id));

  {
    std::vector<int> taus0;
    double l0 = eval_mean_loss(state.net, train, cfg.loss, -1, -1, &taus0);
    res.curve.push_back({0, l0, modal_tau(taus0)});
  }
  double initial_loss = res.curve.front().loss;
  int divergent_run = 0;

  int batch_size = std::min<int>(cfg.batch_size, static_cast<int>(train.size()));
  if (batch_size < 1) batch_size = 1;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<const ingest::DyadWindow*> order = train;
    shuffler.shuffle(order);
    double loss_sum = 0.0;
    int steps = 0;
    std::vector<int> taus;
    for (std::size_t off = 0; off < order.size(); off += static_cast<std::size_t>(batch_size)) {
      std::vector<const ingest::DyadWindow*> batch(
          order.begin() + static_cast<std::ptrdiff_t>(off),
          order.begin() + static_cast<std::ptrdiff_t>(
                              std::min(off + static_cast<std::size_t>(batch_size), order.size())));
      StepStats st = search_step(state, batch, cfg);
      loss_sum += st.mean_loss;
      ++steps;
      taus.insert(taus.end(), st.taus.begin(), st.taus.end());
    }
    double epoch_loss = loss_sum / std::max(1, steps);
    state.epoch = epoch;
    res.curve.push_back({epoch, epoch_loss, modal_tau(taus)});
    state.history = res.curve;

    if (epoch_loss > cfg.diverge_factor * std::max(initial_loss, 1e-12)) {
      if (++divergent_run >= cfg.diverge_epochs)
        throw SearchDivergence("run_search: loss exceeded " +
                               std::to_string(cfg.diverge_factor) +
                               "x the initial loss for " + std::to_string(divergent_run) +
                               " consecutive epochs (subject " + data.subject_id + ")");
    } else {
      divergent_run = 0;
    }
    if (epoch > cfg.converge_window) {
      double before =
          res.curve[static_cast<std::size_t>(epoch - cfg.converge_window)].loss;
      double improvement = (before - epoch_loss) / std::max(std::abs(before), 1e-12);
      if (improvement < cfg.converge_rel) {
        res.converged = true;
        break;
      }
    }
  }

  if (cfg.depth_search && !hold.empty()) {
    res.depth = search_depth(state.net, hold, cfg, true);
    res.depth_searched = true;
  }

  CheckpointMeta meta;
  meta.subject_id = data.subject_id;
  meta.seed = cfg.seed;
  meta.config_hash = config_hash;
  meta.curve = res.curve;
  std::string ckpt = (fs::path(out_dir) / ("subject_" + data.subject_id + ".ckpt.json")).string();
  save_checkpoint(ckpt, state.net, meta);
  res.checkpoint_path = ckpt;

  std::string curve_path =
      (fs::path(out_dir) / ("subject_" + data.subject_id + ".curve.csv")).string();
  {
    std::ofstream f(curve_path);
    f << "epoch,loss,modal_tau\n";
    for (const auto& p : res.curve)
      f << p.epoch << "," << p.loss << "," << p.modal_tau << "\n";
  }
  res.curve_path = curve_path;
  res.incidents = state.incidents;
  return res;
}

}  // namespace percog::nas
