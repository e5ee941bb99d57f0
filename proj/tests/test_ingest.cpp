#include <cmath>
#include <complex>

#include "doctest.h"
#include "percog/ingest/landmarks.hpp"
#include "percog/ingest/logmel.hpp"
#include "percog/ingest/synth.hpp"
#include "percog/ingest/windows.hpp"
#include "percog/rng.hpp"

using namespace percog;
using namespace percog::ingest;

namespace {

Tensor random_face_clip(int frames, Rng& rng, double jitter = 0.02) {
  const Tensor& tpl = MeanFaceTemplate::standard().points;
  Tensor clip({frames, 68, 2});
  for (int t = 0; t < frames; ++t)
    for (int j = 0; j < 68; ++j)
      for (int c = 0; c < 2; ++c)
        clip.at3(t, j, c) = tpl.at2(j, c) + jitter * rng.gaussian();
  return clip;
}

void apply_similarity(Tensor& clip, double angle, double s, double tx, double ty) {
  for (int t = 0; t < clip.dim(0); ++t)
    for (int j = 0; j < 68; ++j) {
      double x = clip.at3(t, j, 0), y = clip.at3(t, j, 1);
      clip.at3(t, j, 0) = s * (std::cos(angle) * x - std::sin(angle) * y) + tx;
      clip.at3(t, j, 1) = s * (std::sin(angle) * x + std::cos(angle) * y) + ty;
    }
}

// Independent least-squares similarity fit: minimize over (a,b,tx,ty) the
// squared residual of [[a,-b],[b,a]] p + t = q via the 4x4 normal equations
// solved by Gaussian elimination. A different algebraic route than the
// centred closed form used by the implementation.
void procrustes_normal_equations(const double* p, const Tensor& q, double* out) {
  double m[4][5] = {};
  for (int i = 0; i < 68; ++i) {
    double px = p[2 * i], py = p[2 * i + 1];
    double rows[2][4] = {{px, -py, 1.0, 0.0}, {py, px, 0.0, 1.0}};
    double rhs[2] = {q.at2(i, 0), q.at2(i, 1)};
    for (int r = 0; r < 2; ++r)
      for (int u = 0; u < 4; ++u) {
        for (int v = 0; v < 4; ++v) m[u][v] += rows[r][u] * rows[r][v];
        m[u][4] += rows[r][u] * rhs[r];
      }
  }
  for (int c = 0; c < 4; ++c) {
    int piv = c;
    for (int r = c + 1; r < 4; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    for (int v = 0; v <= 4; ++v) std::swap(m[c][v], m[piv][v]);
    for (int r = 0; r < 4; ++r) {
      if (r == c) continue;
      double f = m[r][c] / m[c][c];
      for (int v = c; v <= 4; ++v) m[r][v] -= f * m[c][v];
    }
  }
  double a = m[0][4] / m[0][0], b = m[1][4] / m[1][1];
  double tx = m[2][4] / m[2][2], ty = m[3][4] / m[3][3];
  for (int i = 0; i < 68; ++i) {
    double px = p[2 * i], py = p[2 * i + 1];
    out[2 * i] = a * px - b * py + tx;
    out[2 * i + 1] = b * px + a * py + ty;
  }
}

}  // namespace

TEST_CASE("normalize_landmarks: template input is a fixed point") {
  const auto& tpl = MeanFaceTemplate::standard();
  Tensor clip({3, 68, 2});
  for (int t = 0; t < 3; ++t)
    for (int j = 0; j < 68; ++j)
      for (int c = 0; c < 2; ++c) clip.at3(t, j, c) = tpl.points.at2(j, c);
  auto res = normalize_landmarks(clip, tpl);
  for (int i = 0; i < clip.numel(); ++i)
    CHECK(res.seq.points[i] == doctest::Approx(clip[i]).epsilon(1e-12));
  CHECK(res.interpolated_frames.empty());
}

TEST_CASE("normalize_landmarks inverts a uniform scale and shift of the template") {
  const auto& tpl = MeanFaceTemplate::standard();
  Tensor clip({2, 68, 2});
  for (int t = 0; t < 2; ++t)
    for (int j = 0; j < 68; ++j)
      for (int c = 0; c < 2; ++c) clip.at3(t, j, c) = 2.0 * tpl.points.at2(j, c) + 0.3;
  auto res = normalize_landmarks(clip, tpl);
  for (int j = 0; j < 68; ++j)
    for (int c = 0; c < 2; ++c)
      CHECK(res.seq.points.at3(0, j, c) ==
            doctest::Approx(tpl.points.at2(j, c)).epsilon(1e-9));
}

TEST_CASE("normalize_landmarks matches the normal-equations oracle") {
  Rng rng(11);
  Tensor clip = random_face_clip(5, rng);
  apply_similarity(clip, 0.4, 1.3, 0.05, -0.08);
  const auto& tpl = MeanFaceTemplate::standard();
  auto res = normalize_landmarks(clip, tpl);
  for (int t = 0; t < 5; ++t) {
    double expected[136];
    procrustes_normal_equations(&clip.v[static_cast<std::size_t>(t) * 136], tpl.points,
                                expected);
    for (int i = 0; i < 136; ++i)
      CHECK(res.seq.points[t * 136 + i] == doctest::Approx(expected[i]).epsilon(1e-6));
  }
}

TEST_CASE("normalize_landmarks is idempotent and similarity-invariant") {
  Rng rng(12);
  Tensor clip = random_face_clip(6, rng);
  const auto& tpl = MeanFaceTemplate::standard();
  auto once = normalize_landmarks(clip, tpl);
  auto twice = normalize_landmarks(once.seq.points, tpl);
  for (int i = 0; i < clip.numel(); ++i)
    CHECK(std::abs(twice.seq.points[i] - once.seq.points[i]) < 1e-6);

  Tensor moved = clip;
  apply_similarity(moved, -0.7, 0.6, 0.2, 0.1);
  auto from_moved = normalize_landmarks(moved, tpl);
  for (int i = 0; i < clip.numel(); ++i)
    CHECK(std::abs(from_moved.seq.points[i] - once.seq.points[i]) < 1e-6);
}

TEST_CASE("normalize_landmarks flags and interpolates degenerate frames") {
  Rng rng(13);
  Tensor clip = random_face_clip(5, rng);
  for (int j = 0; j < 68; ++j) {  // frame 2: all points identical
    clip.at3(2, j, 0) = 0.4;
    clip.at3(2, j, 1) = 0.4;
  }
  const auto& tpl = MeanFaceTemplate::standard();
  auto res = normalize_landmarks(clip, tpl);
  REQUIRE(res.interpolated_frames == std::vector<int>{2});
  for (int i = 0; i < 136; ++i) {
    double mid = 0.5 * (res.seq.points[1 * 136 + i] + res.seq.points[3 * 136 + i]);
    CHECK(res.seq.points[2 * 136 + i] == doctest::Approx(mid).epsilon(1e-12));
  }

  Tensor all_bad({2, 68, 2});
  for (int i = 0; i < all_bad.numel(); ++i) all_bad[i] = 0.25;
  CHECK_THROWS_AS(normalize_landmarks(all_bad, tpl), IngestError);
}

TEST_CASE("compute_logmel: silence hits the log floor, 1s at 25fps gives 25 frames") {
  std::vector<double> silence(16000, 0.0);
  auto mel = compute_logmel(silence, 16000, 25.0, 25);
  CHECK(mel.frames() == 25);
  for (double x : mel.bins.v) CHECK(x == doctest::Approx(std::log(1e-6)).epsilon(1e-12));
}

TEST_CASE("compute_logmel reconciles the frame count to the video") {
  Rng rng(14);
  for (int video_frames : {10, 25, 40, 77}) {
    std::vector<double> wave(16000);
    for (auto& s : wave) s = 0.1 * rng.gaussian();
    auto mel = compute_logmel(wave, 16000, 25.0, video_frames);
    CHECK(mel.frames() == video_frames);
  }
  std::vector<double> too_short(3000, 0.0);
  CHECK_THROWS_AS(compute_logmel(too_short, 16000, 25.0, 25), IngestError);
}

TEST_CASE("compute_logmel peak bin agrees with a naive DFT + mel oracle") {
  const int sr = 16000;
  std::vector<double> wave(sr);
  for (int i = 0; i < sr; ++i)
    wave[static_cast<std::size_t>(i)] = std::sin(2.0 * M_PI * 440.0 * i / sr);
  auto mel = compute_logmel(wave, sr, 25.0, 25);

  // oracle: hann window, naive O(N^2) DFT, its own triangular mel filters
  int win = 640;
  int nfft = 1024;
  std::vector<double> frame(static_cast<std::size_t>(nfft), 0.0);
  for (int i = 0; i < win; ++i)
    frame[static_cast<std::size_t>(i)] =
        wave[static_cast<std::size_t>(i)] *
        0.5 * (1.0 - std::cos(2.0 * M_PI * i / (win - 1)));
  std::vector<double> power(static_cast<std::size_t>(nfft / 2 + 1));
  for (int k = 0; k <= nfft / 2; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (int n = 0; n < nfft; ++n)
      acc += frame[static_cast<std::size_t>(n)] *
             std::polar(1.0, -2.0 * M_PI * k * n / nfft);
    power[static_cast<std::size_t>(k)] = std::norm(acc);
  }
  auto mel_of = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto hz_of = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  double mel_max = mel_of(sr / 2.0);
  int best_bin = -1;
  double best_e = -1.0;
  for (int m = 0; m < 64; ++m) {
    double lo = hz_of(mel_max * m / 65.0), mid = hz_of(mel_max * (m + 1) / 65.0),
           hi = hz_of(mel_max * (m + 2) / 65.0);
    double e = 0.0;
    for (int k = 0; k <= nfft / 2; ++k) {
      double f = static_cast<double>(k) * sr / nfft;
      double wgt = 0.0;
      if (f > lo && f < mid)
        wgt = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        wgt = (hi - f) / (hi - mid);
      e += wgt * power[static_cast<std::size_t>(k)];
    }
    if (e > best_e) {
      best_e = e;
      best_bin = m;
    }
  }
  int impl_best = 0;
  for (int m = 1; m < 64; ++m)
    if (mel.bins.at2(0, m) > mel.bins.at2(0, impl_best)) impl_best = m;
  CHECK(impl_best == best_bin);
}

TEST_CASE("standardize centres and scales, and survives constant input") {
  Rng rng(15);
  MelSpectrogram m;
  m.bins = Tensor({20, 64});
  for (auto& x : m.bins.v) x = 3.0 + 2.0 * rng.gaussian();
  auto s = standardize(m);
  double mean = 0.0, var = 0.0;
  for (double x : s.bins.v) mean += x;
  mean /= s.bins.numel();
  for (double x : s.bins.v) var += (x - mean) * (x - mean);
  var /= s.bins.numel();
  CHECK(std::abs(mean) < 1e-10);
  CHECK(var == doctest::Approx(1.0).epsilon(1e-9));

  MelSpectrogram flat;
  flat.bins = Tensor({5, 64}, 7.0);
  auto sf = standardize(flat);
  for (double x : sf.bins.v) CHECK(x == 0.0);
}

TEST_CASE("window_dyad forced counts") {
  auto make_clip = [](int t) {
    return std::make_tuple(Tensor({t, 64}), Tensor({t, 68, 2}), Tensor({t, 68, 2}));
  };
  {
    auto [a, s, l] = make_clip(105);
    auto r = window_dyad(a, s, l, 0, 80);
    REQUIRE(r.windows.size() == 1);
    CHECK(r.windows[0].start_frame == 0);
  }
  {
    auto [a, s, l] = make_clip(185);
    auto r = window_dyad(a, s, l, 0, 80);
    REQUIRE(r.windows.size() == 2);
    CHECK(r.windows[0].start_frame == 0);
    CHECK(r.windows[1].start_frame == 80);
  }
  {
    auto [a, s, l] = make_clip(104);
    auto r = window_dyad(a, s, l, 0, 40);
    CHECK(r.windows.empty());
    CHECK(r.too_short);
  }
}

TEST_CASE("window_dyad matches the enumeration oracle and covers the span") {
  Tensor audio({500, 64});
  Tensor lm({500, 68, 2});
  Tensor li({500, 68, 2});
  for (int i = 0; i < audio.numel(); ++i) audio[i] = i * 0.001;
  auto r = window_dyad(audio, lm, li, 0, 40);

  std::vector<int> expected_starts;
  for (int s = 0; s + 105 <= 500; s += 40) expected_starts.push_back(s);
  CHECK(expected_starts.size() == 10);  // floor((500-105)/40)+1
  REQUIRE(r.windows.size() == expected_starts.size());
  std::vector<char> covered(500, 0);
  for (std::size_t i = 0; i < r.windows.size(); ++i) {
    CHECK(r.windows[i].start_frame == expected_starts[i]);
    CHECK(r.windows[i].speaker_audio.at2(0, 0) ==
          doctest::Approx(audio.at2(expected_starts[i], 0)));
    for (int f = r.windows[i].start_frame; f < r.windows[i].start_frame + 105; ++f)
      covered[static_cast<std::size_t>(f)] = 1;
  }
  int last_start = expected_starts.back();
  for (int f = 0; f < last_start + 105; ++f)
    CHECK(covered[static_cast<std::size_t>(f)] == 1);
}

TEST_CASE("synth_dyad identity map with zero delay reproduces the speaker exactly") {
  SynthConfig cfg;
  cfg.clip_frames = 150;
  cfg.delay = 0;
  cfg.noise_sigma = 0.0;
  cfg.map_mode = SynthConfig::MapMode::identity;
  auto d = synth_dyad(cfg, 99);
  CHECK(d.listener_landmarks.v == d.speaker_landmarks.v);
}

TEST_CASE("synth_dyad is a pure function of config and seed") {
  SynthConfig cfg;
  cfg.clip_frames = 120;
  cfg.delay = 5;
  cfg.noise_sigma = 0.01;
  auto a = synth_dyad(cfg, 1234);
  auto b = synth_dyad(cfg, 1234);
  CHECK(a.speaker_audio.v == b.speaker_audio.v);
  CHECK(a.speaker_landmarks.v == b.speaker_landmarks.v);
  CHECK(a.listener_landmarks.v == b.listener_landmarks.v);
  CHECK(a.traits == b.traits);
  auto c = synth_dyad(cfg, 1235);
  CHECK(a.listener_landmarks.v != c.listener_landmarks.v);
}

TEST_CASE("synth_dyad injected delay is recovered by a brute-force lag scan") {
  SynthConfig cfg;
  cfg.clip_frames = 300;
  cfg.delay = 7;
  cfg.noise_sigma = 0.0;
  auto d = synth_dyad(cfg, 321);
  const auto& tpl = MeanFaceTemplate::standard().points;

  auto dev = [&](const Tensor& lm, int t, int i) {
    return lm.v[static_cast<std::size_t>(t) * 136 + i] - tpl.v[static_cast<std::size_t>(i)];
  };
  int best_lag = -1;
  double best_corr = -1e300;
  for (int lag = 0; lag <= kMaxDelay; ++lag) {
    double corr = 0.0;
    for (int t = kMaxDelay; t < cfg.clip_frames; ++t)
      for (int i = 0; i < 136; ++i)
        corr += dev(d.listener_landmarks, t, i) * dev(d.speaker_landmarks, t - lag, i);
    if (corr > best_corr) {
      best_corr = corr;
      best_lag = lag;
    }
  }
  CHECK(best_lag == 7);
}

TEST_CASE("synth_dyad rejects an out-of-range delay") {
  SynthConfig cfg;
  cfg.delay = 26;
  CHECK_THROWS_AS(synth_dyad(cfg, 1), IngestError);
}

TEST_CASE("synth_dyad traits are the documented clamped affine map of the parameters") {
  SynthConfig cfg;
  cfg.clip_frames = 110;
  auto d = synth_dyad(cfg, 777);
  double zbar = 0.0;
  for (double z : d.map_params) zbar += z / 5.0;
  for (int i = 0; i < 5; ++i) {
    double expect = std::clamp(
        0.1 + 0.8 * (0.7 * d.map_params[static_cast<std::size_t>(i)] + 0.3 * zbar), 0.0,
        1.0);
    CHECK(d.traits[static_cast<std::size_t>(i)] == doctest::Approx(expect).epsilon(1e-12));
  }
}
