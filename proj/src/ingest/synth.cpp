#include "percog/ingest/synth.hpp"

#include <cmath>
#include <vector>

#include "percog/ingest/landmarks.hpp"
#include "percog/ingest/windows.hpp"
#include "percog/rng.hpp"

namespace percog::ingest {

namespace {

constexpr int kLm = 136;   // 68 points * 2
constexpr int kAud = 64;
constexpr double kSquashAmp = 0.08;

// Mixing structures of the subject map, fixed for every subject and run.
struct FixedMap {
  std::vector<double> m;  // (136,136), spectral scale ~1
  std::vector<double> b;  // (136,64)
  std::vector<double> u;  // (136) unit vector
};

const FixedMap& fixed_map() {
  static const FixedMap fm = [] {
    FixedMap f;
    Rng rng(0x5eedf00dULL);
    f.m.resize(kLm * kLm);
    for (auto& x : f.m) x = rng.gaussian() / std::sqrt(static_cast<double>(kLm));
    f.b.resize(kLm * kAud);
    for (auto& x : f.b) x = rng.gaussian() / std::sqrt(static_cast<double>(kAud));
    f.u.resize(kLm);
    double norm = 0.0;
    for (auto& x : f.u) {
      x = rng.gaussian();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : f.u) x /= norm;
    return f;
  }();
  return fm;
}

struct Modes {
  // d(t) = sum_m amp[m] * dir[m] * sin(omega[m] t + phase[m])
  std::vector<double> amp, omega, phase;
  std::vector<std::vector<double>> dir;
};

Modes make_modes(Rng& rng, int n_modes, int dim, double total_amp) {
  Modes md;
  md.amp.resize(static_cast<std::size_t>(n_modes));
  md.omega.resize(static_cast<std::size_t>(n_modes));
  md.phase.resize(static_cast<std::size_t>(n_modes));
  md.dir.resize(static_cast<std::size_t>(n_modes));
  for (int m = 0; m < n_modes; ++m) {
    md.amp[static_cast<std::size_t>(m)] = total_amp * rng.uniform(0.5, 1.0) / n_modes;
    md.omega[static_cast<std::size_t>(m)] = rng.uniform(0.05, 0.6);
    md.phase[static_cast<std::size_t>(m)] = rng.uniform(0.0, 2.0 * M_PI);
    auto& d = md.dir[static_cast<std::size_t>(m)];
    d.resize(static_cast<std::size_t>(dim));
    double norm = 0.0;
    for (auto& x : d) {
      x = rng.gaussian();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : d) x /= norm;
  }
  return md;
}

void eval_modes(const Modes& md, int t, double* out, int dim) {
  std::fill(out, out + dim, 0.0);
  for (std::size_t m = 0; m < md.amp.size(); ++m) {
    double s = md.amp[m] * std::sin(md.omega[m] * t + md.phase[m]);
    const auto& d = md.dir[m];
    for (int j = 0; j < dim; ++j) out[j] += s * d[static_cast<std::size_t>(j)];
  }
}

}  // namespace

SynthDyad synth_dyad(const SynthConfig& cfg, std::uint64_t seed) {
  if (cfg.delay < 0 || cfg.delay > kMaxDelay)
    throw IngestError("synth_dyad: delay must lie in [0,25]");
  if (cfg.clip_frames <= 0) throw IngestError("synth_dyad: clip_frames must be positive");

  Rng root(seed);
  Rng beh = root.derive("behaviour");
  Rng sub = root.derive("subject");
  Rng noi = root.derive("noise");

  const int t_out = cfg.clip_frames;
  const int lead = kMaxDelay;        // master stream starts kMaxDelay frames early
  const int t_master = t_out + lead;

  Modes lm_modes = make_modes(beh, 6, kLm, 0.05);
  Modes au_modes = make_modes(beh, 6, kAud, 1.0);
  // tie half the audio modes to the landmark modes' timing so the audio
  // stream carries information about the facial signal
  for (int m = 0; m < 3; ++m) {
    au_modes.omega[static_cast<std::size_t>(m)] = lm_modes.omega[static_cast<std::size_t>(m)];
    au_modes.phase[static_cast<std::size_t>(m)] = lm_modes.phase[static_cast<std::size_t>(m)];
  }

  std::vector<double> dev(static_cast<std::size_t>(t_master) * kLm);
  std::vector<double> aud(static_cast<std::size_t>(t_master) * kAud);
  for (int t = 0; t < t_master; ++t) {
    eval_modes(lm_modes, t, &dev[static_cast<std::size_t>(t) * kLm], kLm);
    eval_modes(au_modes, t, &aud[static_cast<std::size_t>(t) * kAud], kAud);
  }

  // subject parameters, normalized to [0,1]
  SynthDyad out;
  for (auto& z : out.map_params) z = sub.uniform();
  const auto& z = out.map_params;
  double gain_lm = 0.5 + 0.5 * z[0];
  double gain_mix = 0.8 * (z[1] - 0.5);
  double gain_aud = 0.012 * (2.0 * z[2] - 1.0);
  double bias = 0.04 * (2.0 * z[3] - 1.0);
  double gain_out = 0.7 + 0.6 * z[4];

  // traits are an affine, clamped function of the subject parameters
  double zbar = (z[0] + z[1] + z[2] + z[3] + z[4]) / 5.0;
  for (int i = 0; i < 5; ++i)
    out.traits[static_cast<std::size_t>(i)] =
        std::clamp(0.1 + 0.8 * (0.7 * z[static_cast<std::size_t>(i)] + 0.3 * zbar), 0.0, 1.0);

  const auto& tpl = MeanFaceTemplate::standard().points;
  const auto& fm = fixed_map();

  out.speaker_audio = Tensor({t_out, kAud});
  out.speaker_landmarks = Tensor({t_out, 68, 2});
  out.listener_landmarks = Tensor({t_out, 68, 2});
  out.injected_delay = cfg.delay;

  std::vector<double> g(kLm);
  for (int t = 0; t < t_out; ++t) {
    const double* d_now = &dev[static_cast<std::size_t>(t + lead) * kLm];
    const double* a_now = &aud[static_cast<std::size_t>(t + lead) * kAud];
    for (int b = 0; b < kAud; ++b) out.speaker_audio.at2(t, b) = a_now[b];
    for (int j = 0; j < kLm; ++j)
      out.speaker_landmarks.v[static_cast<std::size_t>(t) * kLm + j] =
          tpl.v[static_cast<std::size_t>(j)] + d_now[j];

    const double* d_del = &dev[static_cast<std::size_t>(t + lead - cfg.delay) * kLm];
    const double* a_del = &aud[static_cast<std::size_t>(t + lead - cfg.delay) * kAud];
    if (cfg.map_mode == SynthConfig::MapMode::identity) {
      for (int j = 0; j < kLm; ++j) g[static_cast<std::size_t>(j)] = d_del[j];
    } else {
      for (int j = 0; j < kLm; ++j) {
        double lin = gain_lm * d_del[j] + bias * fm.u[static_cast<std::size_t>(j)];
        const double* mrow = &fm.m[static_cast<std::size_t>(j) * kLm];
        double mix = 0.0;
        for (int l = 0; l < kLm; ++l) mix += mrow[l] * d_del[l];
        lin += gain_mix * mix;
        const double* brow = &fm.b[static_cast<std::size_t>(j) * kAud];
        double adrive = 0.0;
        for (int l = 0; l < kAud; ++l) adrive += brow[l] * a_del[l];
        lin += gain_aud * adrive;
        g[static_cast<std::size_t>(j)] =
            gain_out * kSquashAmp * std::tanh(lin / kSquashAmp);
      }
    }
    for (int j = 0; j < kLm; ++j) {
      double n = cfg.noise_sigma > 0.0 ? cfg.noise_sigma * noi.gaussian() : 0.0;
      out.listener_landmarks.v[static_cast<std::size_t>(t) * kLm + j] =
          tpl.v[static_cast<std::size_t>(j)] + g[static_cast<std::size_t>(j)] + n;
    }
  }
  return out;
}

}  // namespace percog::ingest
