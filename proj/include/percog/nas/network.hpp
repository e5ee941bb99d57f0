#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "percog/nas/cell.hpp"

namespace percog::nas {

struct NetSpec {
  int n_nodes = 4;
  int n_reg = 3;
  std::array<int, 3> channels{64, 128, 256};  // widths after each down block
  int stem_channels = 64;
  int lstm_hidden = 64;
  int decoder_channels = 0;  // 0 -> channels[2]
  enum class ParamMode { IP, PS } param_mode = ParamMode::IP;
  enum class Modality { AudioFace, Face, FaceSentence } modality = Modality::AudioFace;
  ValidityTable validity{};
  std::uint64_t init_seed = 1;

  int dec_channels() const { return decoder_channels > 0 ? decoder_channels : channels[2]; }
  void validate() const;
};

enum class ModuleTag { Visual, Audio, Fusion, Decoder };
const char* module_name(ModuleTag m);
ModuleTag module_from_name(const std::string& name);

/// One stack of cells. Encoder/decoder blocks own an input projection and
/// feed the projected input to both ports of the first cell; fusion blocks
/// receive their two ports from the fusion wiring. The block output is the
/// sum of the contributions of the active cells. A depth_limit of 0 yields
/// the zero map: masking severs the whole stack.
struct Block {
  ModuleTag module = ModuleTag::Visual;
  int index = 0;
  CellKind kind = CellKind::Regular;
  int channels = 0;
  std::string name;
  Var input_proj;  // (1,c_in,c); null for fusion blocks
  std::vector<Cell> cells;
  int active_depth = 1;
  bool depth_searchable = false;

  Var forward(const Var& x, int depth_limit = -1) const;
  Var forward_stack(const Var& in_pp, const Var& in_p, int depth_limit, int t_in) const;
};

/// Input combiner of a fusion block: proj_va maps the concatenated
/// modality-stream outputs to the cell width (the `prev` port); proj_ff maps
/// the temporally aligned earlier fusion outputs (the `prev_prev` port).
struct FusionWiring {
  Var proj_va;
  Var proj_ff;  // null for the first fusion block
};

struct Lstm {
  int layers = 0, input = 0, hidden = 0;
  struct Layer {
    Var w;  // (4h, in+h), gate order i,f,g,o
    Var b;  // (4h)
  };
  std::vector<Layer> ls;
  Var forward(const Var& x) const;  // (C,T) -> (hidden,T)
};

/// The searchable multi-modal reaction model: per-modality encoders (stem +
/// 3 down + 2 regular blocks), a fusion stack mirroring the encoder levels,
/// a 3-layer LSTM memory at the temporal bottleneck and a decoder (2 regular
/// + 3 up blocks) emitting 80 frames of 68-point landmarks.
struct CognitiveNet {
  NetSpec spec;

  Var vis_stem_w, vis_stem_b;
  Var aud_stem_w, aud_stem_b;
  std::vector<Block> blocks;  // canonical order: visual, audio, fusion, decoder
  std::vector<FusionWiring> fusion_wiring;
  Var mem_in_w;
  Lstm lstm;
  Var mem_out_w;
  Var head_w, head_b;

  std::vector<int> vis_idx, aud_idx, fus_idx, dec_idx;  // indices into blocks

  // PS mode: shared alpha parameters keyed by (cell kind, edge position)
  std::map<std::pair<int, int>, Var> shared_alphas;

  /// Full forward pass. audio: (80,64) (ignored in face modes), lm:
  /// (80,68,2), category: (80,4) for the sentence-category modality.
  /// override_block/-depth mask a single block to a reduced depth.
  /// block_taps, when given, receives every searched block's output in
  /// canonical block order. Throws NumericalError naming the first block
  /// that produces a non-finite value.
  Var forward(const Tensor& audio, const Tensor& lm, const Tensor* category = nullptr,
              int override_block = -1, int override_depth = -1,
              std::vector<Var>* block_taps = nullptr) const;

  /// Convenience: forward and reshape to (80,68,2).
  Tensor predict(const Tensor& audio, const Tensor& lm,
                 const Tensor* category = nullptr) const;

  std::vector<Var> alpha_params() const;   // unique alpha vectors
  std::vector<Var> weight_params() const;  // everything else that trains
  long alpha_census() const;               // valid alpha scalars over unique storage

  std::vector<int> depth_searchable_blocks() const;
};

CognitiveNet assemble_network(const NetSpec& spec);

/// Flattens (T,68,2) landmarks to the (136,T) channel-major layout used by
/// the network (channel = 2*landmark + coordinate) and back.
Tensor landmarks_to_channels(const Tensor& lm);
Tensor channels_to_landmarks(const Tensor& ch);

}  // namespace percog::nas
