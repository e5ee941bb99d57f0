#include "percog/nas/network.hpp"

#include <cmath>
#include <set>

#include "percog/ingest/landmarks.hpp"

namespace percog::nas {

namespace {

Var init_conv1x1(int c_in, int c_out, Rng& rng) {
  Tensor w({1, c_in, c_out});
  double s = std::sqrt(2.0 / c_in);
  for (auto& x : w.v) x = s * rng.gaussian();
  return make_param(std::move(w));
}

Var init_conv(int k, int c_in, int c_out, Rng& rng) {
  Tensor w({k, c_in, c_out});
  double s = std::sqrt(2.0 / (k * c_in));
  for (auto& x : w.v) x = s * rng.gaussian();
  return make_param(std::move(w));
}

void check_block_finite(const Var& v, const std::string& name) {
  if (!all_finite(v->val))
    throw NumericalError("non-finite values produced by block " + name);
}

Var align_time(Var x, int t_target) {
  while (x->val.dim(1) > t_target) x = avgpool1d(x, 2, 2);
  while (x->val.dim(1) < t_target) x = upsample_nearest2(x);
  return x;
}

}  // namespace

void NetSpec::validate() const {
  if (n_nodes < 1) throw ConfigError("net spec: n_nodes must be >= 1");
  if (n_reg < 1) throw ConfigError("net spec: n_reg must be >= 1");
  if (stem_channels < 1 || lstm_hidden < 1)
    throw ConfigError("net spec: channel widths must be positive");
  for (int c : channels)
    if (c < 1) throw ConfigError("net spec: channel widths must be positive");
  if (channels[0] % stem_channels != 0 || channels[1] % channels[0] != 0 ||
      channels[2] % channels[1] != 0)
    throw ConfigError("net spec: non-divisible widths across down blocks");
  bool any_regular = false, any_down = false, any_up = false;
  for (int k = 0; k < kNumOps; ++k) {
    any_regular |= validity.regular[static_cast<std::size_t>(k)] != 0;
    any_down |= validity.down[static_cast<std::size_t>(k)] != 0;
    any_up |= validity.up[static_cast<std::size_t>(k)] != 0;
  }
  if (!any_regular || !any_down || !any_up)
    throw ConfigError("net spec: a validity mask admits no operation");
}

const char* module_name(ModuleTag m) {
  switch (m) {
    case ModuleTag::Visual: return "visual";
    case ModuleTag::Audio: return "audio";
    case ModuleTag::Fusion: return "fusion";
    case ModuleTag::Decoder: return "decoder";
  }
  return "visual";
}

ModuleTag module_from_name(const std::string& name) {
  if (name == "visual") return ModuleTag::Visual;
  if (name == "audio") return ModuleTag::Audio;
  if (name == "fusion") return ModuleTag::Fusion;
  if (name == "decoder") return ModuleTag::Decoder;
  throw ConfigError("unknown module name: " + name);
}

Var Block::forward(const Var& x, int depth_limit) const {
  Var h = input_proj ? conv1d(x, input_proj, 1, 1) : x;
  return forward_stack(h, h, depth_limit, h->val.dim(1));
}

Var Block::forward_stack(const Var& in_pp, const Var& in_p, int depth_limit,
                         int t_in) const {
  int d = depth_limit >= 0 ? depth_limit : active_depth;
  if (d > static_cast<int>(cells.size())) d = static_cast<int>(cells.size());
  if (d == 0) {
    int t_out = t_in;
    if (kind == CellKind::Down) t_out = t_in / 2;
    if (kind == CellKind::Up) t_out = t_in * 2;
    return make_const(Tensor({channels, t_out}));
  }
  Var pp = in_pp, p = in_p;
  Var sum;
  for (int c = 0; c < d; ++c) {
    Cell::Out out = cells[static_cast<std::size_t>(c)].forward(pp, p);
    sum = sum ? add(sum, out.contribution) : out.contribution;
    pp = p;
    p = out.next;
  }
  return sum;
}

Var Lstm::forward(const Var& x) const {
  int t = x->val.dim(1);
  Var seq = x;
  for (int l = 0; l < layers; ++l) {
    const auto& lp = ls[static_cast<std::size_t>(l)];
    Var h = make_const(Tensor({hidden}));
    Var c = make_const(Tensor({hidden}));
    std::vector<Var> outs;
    outs.reserve(static_cast<std::size_t>(t));
    for (int i = 0; i < t; ++i) {
      Var xt = col(seq, i);
      Var zin = concat_vec({xt, h});
      Var gates = linear(lp.w, lp.b, zin);
      Var ig = sigmoid_v(slice_vec(gates, 0, hidden));
      Var fg = sigmoid_v(slice_vec(gates, hidden, hidden));
      Var gg = tanh_v(slice_vec(gates, 2 * hidden, hidden));
      Var og = sigmoid_v(slice_vec(gates, 3 * hidden, hidden));
      c = add(mul(fg, c), mul(ig, gg));
      h = mul(og, tanh_v(c));
      outs.push_back(h);
    }
    seq = stack_cols(outs);
  }
  return seq;
}

Tensor landmarks_to_channels(const Tensor& lm) {
  int t = lm.dim(0);
  Tensor out({136, t});
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < 68; ++j)
      for (int c = 0; c < 2; ++c)
        out.at2(2 * j + c, i) = lm.at3(i, j, c);
  return out;
}

Tensor channels_to_landmarks(const Tensor& ch) {
  int t = ch.dim(1);
  Tensor out({t, 68, 2});
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < 68; ++j)
      for (int c = 0; c < 2; ++c) out.at3(i, j, c) = ch.at2(2 * j + c, i);
  return out;
}

namespace {

struct Assembler {
  const NetSpec& spec;
  Rng rng;
  CognitiveNet& net;

  std::vector<Var> shared_for(CellKind kind) {
    // PS mode: one alpha vector per (kind, edge position), shared globally
    std::vector<Var> out;
    auto pairs = Cell::edge_pairs(spec.n_nodes);
    for (std::size_t e = 0; e < pairs.size(); ++e) {
      auto key = std::make_pair(static_cast<int>(kind), static_cast<int>(e));
      auto it = net.shared_alphas.find(key);
      if (it == net.shared_alphas.end())
        it = net.shared_alphas
                 .emplace(key, make_param(Tensor({kNumOps}, 0.0)))
                 .first;
      out.push_back(it->second);
    }
    return out;
  }

  Block make_block(ModuleTag module, int index, CellKind kind, int c_in, int c,
                   int n_cells, const std::string& name, bool with_proj) {
    Block b;
    b.module = module;
    b.index = index;
    b.kind = kind;
    b.channels = c;
    b.name = name;
    if (with_proj) b.input_proj = init_conv1x1(c_in, c, rng);
    b.depth_searchable = n_cells > 1;
    b.active_depth = n_cells;
    for (int i = 0; i < n_cells; ++i) {
      std::vector<Var> shared;
      if (spec.param_mode == NetSpec::ParamMode::PS) shared = shared_for(kind);
      b.cells.push_back(make_cell(kind, spec.n_nodes, c, spec.validity, rng, shared));
    }
    return b;
  }

  void encoder(ModuleTag module, int in_channels, Var& stem_w, Var& stem_b,
               std::vector<int>& idx) {
    const std::string mod = module_name(module);
    stem_w = init_conv(3, in_channels, spec.stem_channels, rng);
    stem_b = make_param(Tensor({spec.stem_channels}, 0.0));
    int c_prev = spec.stem_channels;
    for (int d = 0; d < 3; ++d) {
      int c = spec.channels[static_cast<std::size_t>(d)];
      idx.push_back(static_cast<int>(net.blocks.size()));
      net.blocks.push_back(make_block(module, d, CellKind::Down, c_prev, c, 1,
                                      mod + "_down_" + std::to_string(d), true));
      c_prev = c;
    }
    for (int r = 0; r < 2; ++r) {
      idx.push_back(static_cast<int>(net.blocks.size()));
      net.blocks.push_back(make_block(module, 3 + r, CellKind::Regular, c_prev, c_prev,
                                      spec.n_reg, mod + "_reg_" + std::to_string(r), true));
    }
  }
};

}  // namespace

CognitiveNet assemble_network(const NetSpec& spec) {
  spec.validate();
  CognitiveNet net;
  net.spec = spec;
  Assembler as{spec, Rng(spec.init_seed).derive("net-init"), net};

  as.encoder(ModuleTag::Visual, 136, net.vis_stem_w, net.vis_stem_b, net.vis_idx);

  const bool multimodal = spec.modality == NetSpec::Modality::AudioFace;
  if (multimodal)
    as.encoder(ModuleTag::Audio, 64, net.aud_stem_w, net.aud_stem_b, net.aud_idx);

  if (multimodal) {
    // fusion widths/scales mirror the encoder levels; all fusion cells are
    // regular cells operating at the level's output scale
    const std::array<int, 5> cf{spec.channels[0], spec.channels[1], spec.channels[2],
                                spec.channels[2], spec.channels[2]};
    for (int n = 0; n < 5; ++n) {
      int c = cf[static_cast<std::size_t>(n)];
      int n_cells = n >= 3 ? spec.n_reg : 1;
      net.fus_idx.push_back(static_cast<int>(net.blocks.size()));
      net.blocks.push_back(as.make_block(ModuleTag::Fusion, n, CellKind::Regular, 0, c,
                                         n_cells, "fusion_" + std::to_string(n), false));
      FusionWiring w;
      w.proj_va = init_conv1x1(2 * c, c, as.rng);
      if (n == 1)
        w.proj_ff = init_conv1x1(cf[0], c, as.rng);
      else if (n >= 2)
        w.proj_ff = init_conv1x1(cf[static_cast<std::size_t>(n - 1)] +
                                     cf[static_cast<std::size_t>(n - 2)],
                                 c, as.rng);
      net.fusion_wiring.push_back(std::move(w));
    }
  }

  int c3 = spec.channels[2];
  int bottleneck = multimodal ? 3 * c3 : c3;
  if (spec.modality == NetSpec::Modality::FaceSentence) bottleneck += 4;
  net.mem_in_w = init_conv1x1(bottleneck, spec.lstm_hidden, as.rng);
  net.lstm.layers = 3;
  net.lstm.input = spec.lstm_hidden;
  net.lstm.hidden = spec.lstm_hidden;
  for (int l = 0; l < 3; ++l) {
    int in = spec.lstm_hidden;
    Lstm::Layer lp;
    Tensor w({4 * spec.lstm_hidden, in + spec.lstm_hidden});
    double s = std::sqrt(1.0 / (in + spec.lstm_hidden));
    for (auto& x : w.v) x = s * as.rng.gaussian();
    lp.w = make_param(std::move(w));
    lp.b = make_param(Tensor({4 * spec.lstm_hidden}, 0.0));
    net.lstm.ls.push_back(std::move(lp));
  }
  int cd = spec.dec_channels();
  net.mem_out_w = init_conv1x1(spec.lstm_hidden, cd, as.rng);

  for (int r = 0; r < 2; ++r) {
    net.dec_idx.push_back(static_cast<int>(net.blocks.size()));
    net.blocks.push_back(as.make_block(ModuleTag::Decoder, r, CellKind::Regular, cd, cd,
                                       spec.n_reg, "decoder_reg_" + std::to_string(r), true));
  }
  const std::array<int, 3> up_c{spec.channels[1], spec.channels[0], spec.channels[0]};
  int c_prev = cd;
  for (int u = 0; u < 3; ++u) {
    int c = up_c[static_cast<std::size_t>(u)];
    net.dec_idx.push_back(static_cast<int>(net.blocks.size()));
    net.blocks.push_back(as.make_block(ModuleTag::Decoder, 2 + u, CellKind::Up, c_prev, c,
                                       1, "decoder_up_" + std::to_string(u), true));
    c_prev = c;
  }
  net.head_w = init_conv1x1(c_prev, 136, as.rng);
  // head bias starts at the mean face so the initial prediction sits inside
  // the outlier clamp of the adaptive loss
  {
    const Tensor& tpl = ingest::MeanFaceTemplate::standard().points;
    Tensor b({136});
    for (int j = 0; j < 68; ++j)
      for (int c = 0; c < 2; ++c) b[2 * j + c] = tpl.at2(j, c);
    net.head_b = make_param(std::move(b));
  }
  return net;
}

Var CognitiveNet::forward(const Tensor& audio, const Tensor& lm, const Tensor* category,
                          int override_block, int override_depth,
                          std::vector<Var>* block_taps) const {
  if (block_taps) block_taps->assign(blocks.size(), Var{});
  if (lm.rank() != 3 || lm.dim(0) != 80 || lm.dim(1) != 68 || lm.dim(2) != 2)
    throw ConfigError("forward: landmarks must be (80,68,2)");
  const bool multimodal = spec.modality == NetSpec::Modality::AudioFace;
  if (multimodal && (audio.rank() != 2 || audio.dim(0) != 80 || audio.dim(1) != 64))
    throw ConfigError("forward: audio must be (80,64)");
  if (spec.modality == NetSpec::Modality::FaceSentence &&
      (category == nullptr || category->rank() != 2 || category->dim(0) != 80 ||
       category->dim(1) != 4))
    throw ConfigError("forward: sentence-category input must be (80,4)");

  auto depth_of = [&](int block_idx) {
    return block_idx == override_block ? override_depth : -1;
  };
  auto run_chain = [&](const std::vector<int>& idx, Var h,
                       std::vector<Var>* taps) -> Var {
    for (int bi : idx) {
      const Block& b = blocks[static_cast<std::size_t>(bi)];
      h = b.forward(h, depth_of(bi));
      check_block_finite(h, b.name);
      if (taps) taps->push_back(h);
      if (block_taps) (*block_taps)[static_cast<std::size_t>(bi)] = h;
    }
    return h;
  };

  Var vl = make_const(landmarks_to_channels(lm));
  Var vs = relu(add_bias_rows(conv1d(vl, vis_stem_w, 1, 1), vis_stem_b));
  std::vector<Var> vis_taps;
  Var v_out = run_chain(vis_idx, vs, &vis_taps);

  Var bottleneck_in;
  if (multimodal) {
    Tensor at({64, 80});
    for (int t = 0; t < 80; ++t)
      for (int b = 0; b < 64; ++b) at.at2(b, t) = audio.at2(t, b);
    Var va = make_const(std::move(at));
    Var asx = relu(add_bias_rows(conv1d(va, aud_stem_w, 1, 1), aud_stem_b));
    std::vector<Var> aud_taps;
    Var a_out = run_chain(aud_idx, asx, &aud_taps);

    Var f_prev, f_prev2;
    for (std::size_t n = 0; n < fus_idx.size(); ++n) {
      const Block& fb = blocks[static_cast<std::size_t>(fus_idx[n])];
      const FusionWiring& w = fusion_wiring[n];
      int t_n = vis_taps[n]->val.dim(1);
      Var in_p = conv1d(concat_rows({vis_taps[n], aud_taps[n]}), w.proj_va, 1, 1);
      Var in_pp;
      if (n == 0) {
        in_pp = in_p;
      } else if (n == 1) {
        in_pp = conv1d(align_time(f_prev, t_n), w.proj_ff, 1, 1);
      } else {
        in_pp = conv1d(concat_rows({align_time(f_prev, t_n), align_time(f_prev2, t_n)}),
                       w.proj_ff, 1, 1);
      }
      Var f_out = fb.forward_stack(in_pp, in_p, depth_of(fus_idx[n]), t_n);
      check_block_finite(f_out, fb.name);
      if (block_taps) (*block_taps)[static_cast<std::size_t>(fus_idx[n])] = f_out;
      f_prev2 = f_prev;
      f_prev = f_out;
    }
    bottleneck_in = concat_rows({v_out, a_out, f_prev});
  } else if (spec.modality == NetSpec::Modality::FaceSentence) {
    Tensor ct({4, 80});
    for (int t = 0; t < 80; ++t)
      for (int c = 0; c < 4; ++c) ct.at2(c, t) = category->at2(t, c);
    Var cat = align_time(make_const(std::move(ct)), v_out->val.dim(1));
    bottleneck_in = concat_rows({v_out, cat});
  } else {
    bottleneck_in = v_out;
  }

  Var mem = conv1d(bottleneck_in, mem_in_w, 1, 1);
  Var hseq = lstm.forward(mem);
  check_block_finite(hseq, "memory");
  Var h = conv1d(hseq, mem_out_w, 1, 1);
  h = run_chain(dec_idx, h, nullptr);
  Var out = add_bias_rows(conv1d(h, head_w, 1, 1), head_b);
  check_block_finite(out, "head");
  return out;
}

Tensor CognitiveNet::predict(const Tensor& audio, const Tensor& lm,
                             const Tensor* category) const {
  return channels_to_landmarks(forward(audio, lm, category)->val);
}

std::vector<Var> CognitiveNet::alpha_params() const {
  std::vector<Var> out;
  std::set<const Node*> seen;
  for (const auto& b : blocks)
    for (const auto& c : b.cells)
      for (const auto& e : c.edges)
        if (seen.insert(e.alphas.get()).second) out.push_back(e.alphas);
  return out;
}

std::vector<Var> CognitiveNet::weight_params() const {
  std::vector<Var> out;
  auto push = [&out](const Var& v) {
    if (v) out.push_back(v);
  };
  push(vis_stem_w);
  push(vis_stem_b);
  push(aud_stem_w);
  push(aud_stem_b);
  for (const auto& b : blocks) {
    push(b.input_proj);
    for (const auto& c : b.cells) {
      for (const auto& e : c.edges)
        for (const auto& w : e.weights) push(w);
      push(c.out_proj);
      push(c.contrib_proj);
    }
  }
  for (const auto& w : fusion_wiring) {
    push(w.proj_va);
    push(w.proj_ff);
  }
  push(mem_in_w);
  for (const auto& l : lstm.ls) {
    push(l.w);
    push(l.b);
  }
  push(mem_out_w);
  push(head_w);
  push(head_b);
  return out;
}

long CognitiveNet::alpha_census() const {
  long n = 0;
  std::set<const Node*> seen;
  for (const auto& b : blocks)
    for (const auto& c : b.cells)
      for (const auto& e : c.edges)
        if (seen.insert(e.alphas.get()).second) n += e.valid_count();
  return n;
}

std::vector<int> CognitiveNet::depth_searchable_blocks() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (blocks[i].depth_searchable) out.push_back(static_cast<int>(i));
  return out;
}

}  // namespace percog::nas
