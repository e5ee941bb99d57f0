#include "percog/ingest/logmel.hpp"

#include <cmath>
#include <complex>

#include "percog/ingest/landmarks.hpp"  // IngestError

namespace percog::ingest {

namespace {

void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * M_PI / static_cast<double>(len);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        auto u = a[i + j];
        auto v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Triangular filters, mel-spaced between 0 and sr/2, over nfft/2+1 bins.
std::vector<std::vector<double>> mel_filterbank(int n_mels, int nfft, int sr) {
  int nbins = nfft / 2 + 1;
  double mel_max = hz_to_mel(sr / 2.0);
  std::vector<double> centers(static_cast<std::size_t>(n_mels) + 2);
  for (int m = 0; m < n_mels + 2; ++m)
    centers[static_cast<std::size_t>(m)] =
        mel_to_hz(mel_max * m / (n_mels + 1));
  std::vector<std::vector<double>> fb(
      static_cast<std::size_t>(n_mels),
      std::vector<double>(static_cast<std::size_t>(nbins), 0.0));
  for (int m = 0; m < n_mels; ++m) {
    double lo = centers[static_cast<std::size_t>(m)];
    double mid = centers[static_cast<std::size_t>(m) + 1];
    double hi = centers[static_cast<std::size_t>(m) + 2];
    for (int k = 0; k < nbins; ++k) {
      double f = static_cast<double>(k) * sr / nfft;
      if (f > lo && f < mid)
        fb[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        fb[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] = (hi - f) / (hi - mid);
    }
  }
  return fb;
}

}  // namespace

MelSpectrogram compute_logmel(const std::vector<double>& waveform, int sample_rate,
                              double video_frame_rate, int video_frames) {
  if (sample_rate <= 0 || video_frames <= 0 || video_frame_rate <= 0.0)
    throw IngestError("compute_logmel: invalid parameters");
  double video_dur = video_frames / video_frame_rate;
  double audio_dur = static_cast<double>(waveform.size()) / sample_rate;
  if (audio_dur < 0.5 * video_dur)
    throw IngestError("compute_logmel: waveform covers less than half the video");

  int win = static_cast<int>(std::lround(0.040 * sample_rate));
  int stride = win;
  int nfft = 1;
  while (nfft < win) nfft <<= 1;
  int n_frames =
      waveform.size() >= static_cast<std::size_t>(win)
          ? static_cast<int>((waveform.size() - static_cast<std::size_t>(win)) /
                             static_cast<std::size_t>(stride)) + 1
          : 0;
  if (n_frames == 0) throw IngestError("compute_logmel: waveform shorter than one window");

  static thread_local std::vector<std::vector<double>> fb;
  static thread_local int fb_sr = -1, fb_nfft = -1;
  if (fb_sr != sample_rate || fb_nfft != nfft) {
    fb = mel_filterbank(kMelBins, nfft, sample_rate);
    fb_sr = sample_rate;
    fb_nfft = nfft;
  }

  std::vector<double> hann(static_cast<std::size_t>(win));
  for (int i = 0; i < win; ++i)
    hann[static_cast<std::size_t>(i)] =
        0.5 * (1.0 - std::cos(2.0 * M_PI * i / (win - 1)));

  Tensor raw({n_frames, kMelBins});
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(nfft));
  for (int t = 0; t < n_frames; ++t) {
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0));
    for (int i = 0; i < win; ++i)
      buf[static_cast<std::size_t>(i)] =
          waveform[static_cast<std::size_t>(t * stride + i)] *
          hann[static_cast<std::size_t>(i)];
    fft_inplace(buf);
    for (int m = 0; m < kMelBins; ++m) {
      double e = 0.0;
      const auto& filt = fb[static_cast<std::size_t>(m)];
      for (int k = 0; k <= nfft / 2; ++k) {
        double p = std::norm(buf[static_cast<std::size_t>(k)]);
        e += filt[static_cast<std::size_t>(k)] * p;
      }
      raw.at2(t, m) = std::log(e + kLogFloorEps);
    }
  }

  // reconcile to the video frame count: truncate, or repeat the last frame
  MelSpectrogram out;
  out.bins = Tensor({video_frames, kMelBins});
  for (int t = 0; t < video_frames; ++t) {
    int src = std::min(t, n_frames - 1);
    for (int m = 0; m < kMelBins; ++m) out.bins.at2(t, m) = raw.at2(src, m);
  }
  return out;
}

MelSpectrogram standardize(const MelSpectrogram& m) {
  MelSpectrogram out = m;
  double mean = 0.0;
  for (double x : m.bins.v) mean += x;
  mean /= m.bins.numel();
  double var = 0.0;
  for (double x : m.bins.v) var += (x - mean) * (x - mean);
  var /= m.bins.numel();
  double sd = std::sqrt(var);
  if (sd < 1e-12) {
    for (double& x : out.bins.v) x -= mean;
  } else {
    for (double& x : out.bins.v) x = (x - mean) / sd;
  }
  return out;
}

}  // namespace percog::ingest
