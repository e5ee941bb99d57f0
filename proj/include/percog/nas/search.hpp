#pragma once

#include <string>
#include <vector>

#include "percog/adam.hpp"
#include "percog/ingest/windows.hpp"
#include "percog/nas/checkpoint.hpp"
#include "percog/nas/loss.hpp"
#include "percog/nas/network.hpp"

namespace percog::nas {

struct SearchDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SearchConfig {
  int max_epochs = 300;
  int batch_size = 60;
  double lr_alpha = 0.05;
  double lr_omega = 0.001;
  AdaptiveLossConfig loss;
  double converge_rel = 1e-4;  // relative improvement threshold
  int converge_window = 10;    // measured across this many epochs
  double diverge_factor = 10.0;
  int diverge_epochs = 20;
  bool depth_search = true;
  double depth_holdout = 0.2;  // fraction of windows held out for depth masking
  enum class MaskMode { Exclusive, Inclusive } mask_mode = MaskMode::Exclusive;
  std::uint64_t seed = 1;
};

/// Single-level optimisation state: operation parameters and layer weights
/// are co-updated on the same batches by two independent Adam instances. The
/// two optimizers partition the trainable parameters exactly.
struct SearchState {
  CognitiveNet net;
  Adam opt_alpha;
  Adam opt_omega;
  int epoch = 0;
  std::vector<CurvePoint> history;
  int incidents = 0;  // skipped steps (non-finite gradients)

  SearchState(CognitiveNet&& n, const SearchConfig& cfg)
      : net(std::move(n)),
        opt_alpha(net.alpha_params(), cfg.lr_alpha),
        opt_omega(net.weight_params(), cfg.lr_omega) {}
};

struct StepStats {
  double mean_loss = 0.0;
  std::vector<int> taus;
  bool skipped = false;
};

/// One gradient evaluation of the batch-mean adaptive loss; layer weights
/// and operation parameters are updated from the same gradients (no
/// train/validation split). A non-finite gradient skips the update and
/// leaves the state untouched.
StepStats search_step(SearchState& state, const std::vector<const ingest::DyadWindow*>& batch,
                      const SearchConfig& cfg);

struct DepthSearchResult {
  struct PerBlock {
    std::string block_name;
    int block_index = -1;
    double full_loss = 0.0;
    std::vector<double> masked_loss;  // index m-1 holds the loss with cells m.. masked
    std::vector<double> drop;
    int chosen_depth = 1;
  };
  std::vector<PerBlock> blocks;
};

/// Per regular block, independently: mask trailing cells, measure the mean
/// adaptive loss on the evaluation windows, and pick the depth whose masking
/// causes the largest performance drop (ties toward the smaller depth).
/// With apply=true the chosen depths are written to the network.
DepthSearchResult search_depth(CognitiveNet& net,
                               const std::vector<const ingest::DyadWindow*>& eval_windows,
                               const SearchConfig& cfg, bool apply = true);

struct SubjectWindows {
  std::string subject_id;
  std::vector<ingest::DyadWindow> windows;
};

struct RunSearchResult {
  std::string checkpoint_path;
  std::string curve_path;
  std::vector<CurvePoint> curve;  // entry 0 is the pre-update evaluation
  bool converged = false;
  bool depth_searched = false;
  DepthSearchResult depth;
  int incidents = 0;
};

/// Full person-specific search: optimise to convergence or the epoch cap,
/// optionally run the depth search on the held-out tail of the windows, and
/// persist checkpoint + loss curve. Aborts with SearchDivergence when the
/// loss stays above diverge_factor x the initial loss for diverge_epochs
/// consecutive epochs.
RunSearchResult run_search(NetSpec netspec, const SubjectWindows& data,
                           const SearchConfig& cfg, const std::string& out_dir,
                           const std::string& config_hash = "");

}  // namespace percog::nas
