#include "percog/nas/checkpoint.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "percog/hash.hpp"

namespace percog::nas {

using nlohmann::json;

namespace {

json tensor_values(const Var& v) { return json(v->val.v); }

void load_tensor(Var& dst, const json& src, const std::string& where) {
  if (!dst) throw ConfigError("checkpoint: unexpected values for " + where);
  std::vector<double> vals = src.get<std::vector<double>>();
  if (static_cast<int>(vals.size()) != dst->val.numel())
    throw ConfigError("checkpoint: size mismatch in " + where);
  dst->val.v = std::move(vals);
}

json spec_to_json(const NetSpec& s) {
  auto mask_names = [](const ValidityMask& m) {
    std::vector<std::string> names;
    for (int k = 0; k < kNumOps; ++k)
      if (m[static_cast<std::size_t>(k)]) names.push_back(op_name(static_cast<OpKind>(k)));
    return names;
  };
  return json{
      {"n_nodes", s.n_nodes},
      {"n_reg", s.n_reg},
      {"channels", s.channels},
      {"stem_channels", s.stem_channels},
      {"lstm_hidden", s.lstm_hidden},
      {"decoder_channels", s.decoder_channels},
      {"param_mode", s.param_mode == NetSpec::ParamMode::IP ? "ip" : "ps"},
      {"modality", s.modality == NetSpec::Modality::AudioFace     ? "audio_face"
                   : s.modality == NetSpec::Modality::Face        ? "face"
                                                                  : "face_sentence"},
      {"validity",
       {{"regular", mask_names(s.validity.regular)},
        {"down", mask_names(s.validity.down)},
        {"up", mask_names(s.validity.up)}}},
      {"init_seed", s.init_seed},
  };
}

ValidityMask mask_from_names(const json& names) {
  ValidityMask m{};
  for (const auto& n : names)
    m[static_cast<std::size_t>(op_from_name(n.get<std::string>()))] = 1;
  return m;
}

NetSpec spec_from_json(const json& j) {
  NetSpec s;
  s.n_nodes = j.at("n_nodes").get<int>();
  s.n_reg = j.at("n_reg").get<int>();
  auto ch = j.at("channels").get<std::vector<int>>();
  if (ch.size() != 3) throw ConfigError("checkpoint: channels must have 3 entries");
  std::copy(ch.begin(), ch.end(), s.channels.begin());
  s.stem_channels = j.at("stem_channels").get<int>();
  s.lstm_hidden = j.at("lstm_hidden").get<int>();
  s.decoder_channels = j.at("decoder_channels").get<int>();
  s.param_mode = j.at("param_mode").get<std::string>() == "ps" ? NetSpec::ParamMode::PS
                                                               : NetSpec::ParamMode::IP;
  std::string mod = j.at("modality").get<std::string>();
  s.modality = mod == "face"            ? NetSpec::Modality::Face
               : mod == "face_sentence" ? NetSpec::Modality::FaceSentence
                                        : NetSpec::Modality::AudioFace;
  const auto& v = j.at("validity");
  s.validity.regular = mask_from_names(v.at("regular"));
  s.validity.down = mask_from_names(v.at("down"));
  s.validity.up = mask_from_names(v.at("up"));
  s.init_seed = j.at("init_seed").get<std::uint64_t>();
  return s;
}

json net_payload(const CognitiveNet& net) {
  json blocks = json::array();
  for (const auto& b : net.blocks) {
    json cells = json::array();
    for (const auto& c : b.cells) {
      json edges = json::array();
      for (const auto& e : c.edges) {
        json weights = json::object();
        for (int k = 0; k < kNumOps; ++k)
          if (e.weights[static_cast<std::size_t>(k)])
            weights[op_name(static_cast<OpKind>(k))] =
                tensor_values(e.weights[static_cast<std::size_t>(k)]);
        edges.push_back(json{{"i", e.i},
                             {"j", e.j},
                             {"alphas", e.alphas->val.v},
                             {"weights", std::move(weights)}});
      }
      cells.push_back(json{{"edges", std::move(edges)},
                           {"out_proj", tensor_values(c.out_proj)},
                           {"contrib_proj", tensor_values(c.contrib_proj)}});
    }
    json jb{{"name", b.name},
            {"module", module_name(b.module)},
            {"index", b.index},
            {"kind", cell_kind_name(b.kind)},
            {"channels", b.channels},
            {"active_depth", b.active_depth},
            {"cells", std::move(cells)}};
    if (b.input_proj) jb["input_proj"] = tensor_values(b.input_proj);
    blocks.push_back(std::move(jb));
  }

  json plumbing = json::object();
  auto put = [&plumbing](const char* key, const Var& v) {
    if (v) plumbing[key] = tensor_values(v);
  };
  put("vis_stem_w", net.vis_stem_w);
  put("vis_stem_b", net.vis_stem_b);
  put("aud_stem_w", net.aud_stem_w);
  put("aud_stem_b", net.aud_stem_b);
  put("mem_in_w", net.mem_in_w);
  put("mem_out_w", net.mem_out_w);
  put("head_w", net.head_w);
  put("head_b", net.head_b);
  json lstm = json::array();
  for (const auto& l : net.lstm.ls)
    lstm.push_back(json{{"w", tensor_values(l.w)}, {"b", tensor_values(l.b)}});
  plumbing["lstm"] = std::move(lstm);
  json fw = json::array();
  for (const auto& w : net.fusion_wiring) {
    json jw{{"proj_va", tensor_values(w.proj_va)}};
    if (w.proj_ff) jw["proj_ff"] = tensor_values(w.proj_ff);
    fw.push_back(std::move(jw));
  }
  plumbing["fusion_wiring"] = std::move(fw);

  return json{{"blocks", std::move(blocks)}, {"plumbing", std::move(plumbing)}};
}

void load_payload(CognitiveNet& net, const json& payload) {
  const auto& blocks = payload.at("blocks");
  if (blocks.size() != net.blocks.size())
    throw ConfigError("checkpoint: block count mismatch");
  for (std::size_t bi = 0; bi < net.blocks.size(); ++bi) {
    Block& b = net.blocks[bi];
    const json& jb = blocks[bi];
    try {
      if (jb.at("kind").get<std::string>() != cell_kind_name(b.kind) ||
          jb.at("channels").get<int>() != b.channels)
        throw ConfigError("structure mismatch");
      b.active_depth = jb.at("active_depth").get<int>();
      if (b.active_depth < 1 || b.active_depth > static_cast<int>(b.cells.size()))
        throw ConfigError("active depth out of range");
      if (b.input_proj) load_tensor(b.input_proj, jb.at("input_proj"), "input_proj");
      const auto& cells = jb.at("cells");
      if (cells.size() != b.cells.size()) throw ConfigError("cell count mismatch");
      for (std::size_t ci = 0; ci < b.cells.size(); ++ci) {
        Cell& c = b.cells[ci];
        const json& jc = cells[ci];
        const auto& edges = jc.at("edges");
        if (edges.size() != c.edges.size()) throw ConfigError("edge count mismatch");
        for (std::size_t ei = 0; ei < c.edges.size(); ++ei) {
          MixedEdge& e = c.edges[ei];
          load_tensor(e.alphas, edges[ei].at("alphas"), "alphas");
          const auto& ws = edges[ei].at("weights");
          for (int k = 0; k < kNumOps; ++k) {
            Var& w = e.weights[static_cast<std::size_t>(k)];
            const char* name = op_name(static_cast<OpKind>(k));
            if (w) {
              load_tensor(w, ws.at(name), name);
            } else if (ws.contains(name)) {
              throw ConfigError(std::string("unexpected weights for ") + name);
            }
          }
        }
        load_tensor(c.out_proj, jc.at("out_proj"), "out_proj");
        load_tensor(c.contrib_proj, jc.at("contrib_proj"), "contrib_proj");
      }
    } catch (const std::exception& ex) {
      throw ConfigError("checkpoint: corrupt block " + b.name + ": " + ex.what());
    }
  }

  const auto& plumbing = payload.at("plumbing");
  auto get = [&plumbing](const char* key, Var& v) {
    if (v) load_tensor(v, plumbing.at(key), key);
  };
  get("vis_stem_w", net.vis_stem_w);
  get("vis_stem_b", net.vis_stem_b);
  get("aud_stem_w", net.aud_stem_w);
  get("aud_stem_b", net.aud_stem_b);
  get("mem_in_w", net.mem_in_w);
  get("mem_out_w", net.mem_out_w);
  get("head_w", net.head_w);
  get("head_b", net.head_b);
  const auto& lstm = plumbing.at("lstm");
  for (std::size_t l = 0; l < net.lstm.ls.size(); ++l) {
    load_tensor(net.lstm.ls[l].w, lstm.at(l).at("w"), "lstm.w");
    load_tensor(net.lstm.ls[l].b, lstm.at(l).at("b"), "lstm.b");
  }
  const auto& fw = plumbing.at("fusion_wiring");
  if (fw.size() != net.fusion_wiring.size())
    throw ConfigError("checkpoint: fusion wiring count mismatch");
  for (std::size_t i = 0; i < net.fusion_wiring.size(); ++i) {
    load_tensor(net.fusion_wiring[i].proj_va, fw.at(i).at("proj_va"), "proj_va");
    if (net.fusion_wiring[i].proj_ff)
      load_tensor(net.fusion_wiring[i].proj_ff, fw.at(i).at("proj_ff"), "proj_ff");
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const CognitiveNet& net,
                     const CheckpointMeta& meta) {
  json payload = net_payload(net);
  std::string payload_str = payload.dump();
  json curve = json::array();
  for (const auto& p : meta.curve)
    curve.push_back(json{{"epoch", p.epoch}, {"loss", p.loss}, {"modal_tau", p.modal_tau}});
  json doc{
      {"format", "percog-checkpoint"},
      {"version", 1},
      {"spec", spec_to_json(net.spec)},
      {"subject_id", meta.subject_id},
      {"seed", meta.seed},
      {"config_hash", meta.config_hash},
      {"alignment", meta.alignment},
      {"encoding_only", meta.encoding_only},
      {"curve", std::move(curve)},
      {"content_hash", hash_string(payload_str)},
      {"payload", std::move(payload)},
  };
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + tmp);
    f << doc.dump();
    if (!f) throw std::runtime_error("save_checkpoint: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("save_checkpoint: rename failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path, bool allow_encoding_only) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
  json doc;
  try {
    doc = json::parse(f);
  } catch (const std::exception& ex) {
    throw ConfigError("load_checkpoint: malformed JSON in " + path + ": " + ex.what());
  }
  if (doc.value("format", "") != "percog-checkpoint" || doc.value("version", 0) != 1)
    throw ConfigError("load_checkpoint: unrecognised container in " + path);

  LoadedCheckpoint out{assemble_network(spec_from_json(doc.at("spec"))), {}};
  out.meta.subject_id = doc.value("subject_id", "");
  out.meta.seed = doc.value("seed", std::uint64_t{0});
  out.meta.config_hash = doc.value("config_hash", "");
  out.meta.alignment = doc.value("alignment", "none");
  out.meta.encoding_only = doc.value("encoding_only", false);
  if (doc.contains("curve"))
    for (const auto& p : doc.at("curve"))
      out.meta.curve.push_back({p.at("epoch").get<int>(), p.at("loss").get<double>(),
                                p.at("modal_tau").get<int>()});
  if (out.meta.encoding_only && !allow_encoding_only)
    throw ConfigError("load_checkpoint: " + path +
                      " is an encoding-only artifact and cannot be re-executed");
  load_payload(out.net, doc.at("payload"));
  return out;
}

}  // namespace percog::nas
