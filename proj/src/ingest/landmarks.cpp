#include "percog/ingest/landmarks.hpp"

#include <algorithm>
#include <cmath>

namespace percog::ingest {

namespace {

// Synthetic but plausible 68-point layout (jaw 17, brows 10, nose 9, eyes 12,
// mouth 20), used when no external template is supplied.
Tensor build_standard_points() {
  Tensor p({68, 2});
  int i = 0;
  auto set = [&](double x, double y) {
    p.at2(i, 0) = x;
    p.at2(i, 1) = y;
    ++i;
  };
  const double pi = M_PI;
  // jaw: lower half ellipse, left to right
  for (int j = 0; j < 17; ++j) {
    double a = pi * (1.0 - j / 16.0);  // pi..0
    set(0.5 + 0.32 * std::cos(a), 0.52 + 0.34 * std::sin(a) * -1.0 + 0.34);
  }
  // brows
  for (int j = 0; j < 5; ++j) set(0.28 + 0.04 * j, 0.30 - 0.015 * std::sin(pi * j / 4.0));
  for (int j = 0; j < 5; ++j) set(0.56 + 0.04 * j, 0.30 - 0.015 * std::sin(pi * j / 4.0));
  // nose bridge + base
  for (int j = 0; j < 4; ++j) set(0.5, 0.34 + 0.05 * j);
  for (int j = 0; j < 5; ++j) set(0.44 + 0.03 * j, 0.52);
  // eyes: hexagons
  for (int j = 0; j < 6; ++j) {
    double a = 2.0 * pi * j / 6.0;
    set(0.36 + 0.05 * std::cos(a), 0.37 + 0.02 * std::sin(a));
  }
  for (int j = 0; j < 6; ++j) {
    double a = 2.0 * pi * j / 6.0;
    set(0.64 + 0.05 * std::cos(a), 0.37 + 0.02 * std::sin(a));
  }
  // mouth: outer 12 + inner 8
  for (int j = 0; j < 12; ++j) {
    double a = 2.0 * pi * j / 12.0;
    set(0.5 + 0.09 * std::cos(a), 0.66 + 0.04 * std::sin(a));
  }
  for (int j = 0; j < 8; ++j) {
    double a = 2.0 * pi * j / 8.0;
    set(0.5 + 0.05 * std::cos(a), 0.66 + 0.02 * std::sin(a));
  }
  // recentre so the centroid is exactly (0.5, 0.5)
  double cx = 0.0, cy = 0.0;
  for (int j = 0; j < 68; ++j) {
    cx += p.at2(j, 0);
    cy += p.at2(j, 1);
  }
  cx /= 68.0;
  cy /= 68.0;
  for (int j = 0; j < 68; ++j) {
    p.at2(j, 0) += 0.5 - cx;
    p.at2(j, 1) += 0.5 - cy;
  }
  return p;
}

struct Frame2D {
  const double* xy;  // 68*2
};

bool frame_degenerate(const double* f) {
  double mx = 0.0, my = 0.0;
  for (int j = 0; j < 68; ++j) {
    mx += f[2 * j];
    my += f[2 * j + 1];
  }
  mx /= 68.0;
  my /= 68.0;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int j = 0; j < 68; ++j) {
    double dx = f[2 * j] - mx, dy = f[2 * j + 1] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  double tr = sxx + syy;
  if (tr < 1e-12) return true;  // all points coincide
  double disc = std::sqrt((sxx - syy) * (sxx - syy) + 4.0 * sxy * sxy);
  double mineig = 0.5 * (tr - disc);
  return mineig <= 1e-9 * tr;  // collinear
}

// Closed-form 2-D similarity alignment of one frame onto the template,
// expressed with complex arithmetic: p -> a*(p - mean_p) + mean_q where
// a = sum(conj(x_i) y_i) / sum(|x_i|^2).
void align_frame(const double* f, const Tensor& tpl, double* out) {
  double mx = 0.0, my = 0.0, qx = 0.0, qy = 0.0;
  for (int j = 0; j < 68; ++j) {
    mx += f[2 * j];
    my += f[2 * j + 1];
    qx += tpl.at2(j, 0);
    qy += tpl.at2(j, 1);
  }
  mx /= 68.0;
  my /= 68.0;
  qx /= 68.0;
  qy /= 68.0;
  double num_re = 0.0, num_im = 0.0, den = 0.0;
  for (int j = 0; j < 68; ++j) {
    double xr = f[2 * j] - mx, xi = f[2 * j + 1] - my;
    double yr = tpl.at2(j, 0) - qx, yi = tpl.at2(j, 1) - qy;
    num_re += xr * yr + xi * yi;   // Re(conj(x) y)
    num_im += xr * yi - xi * yr;   // Im(conj(x) y)
    den += xr * xr + xi * xi;
  }
  double ar = num_re / den, ai = num_im / den;
  for (int j = 0; j < 68; ++j) {
    double xr = f[2 * j] - mx, xi = f[2 * j + 1] - my;
    double ox = ar * xr - ai * xi + qx;
    double oy = ar * xi + ai * xr + qy;
    out[2 * j] = std::clamp(ox, 0.0, 1.0);
    out[2 * j + 1] = std::clamp(oy, 0.0, 1.0);
  }
}

}  // namespace

const MeanFaceTemplate& MeanFaceTemplate::standard() {
  static const MeanFaceTemplate tpl{build_standard_points()};
  return tpl;
}

NormalizeResult normalize_landmarks(const Tensor& raw, const MeanFaceTemplate& tpl,
                                    double frame_rate) {
  if (raw.rank() != 3 || raw.dim(1) != 68 || raw.dim(2) != 2)
    throw IngestError("normalize_landmarks: expected a (T,68,2) array");
  if (!all_finite(raw))
    throw IngestError("normalize_landmarks: non-finite input coordinate");
  int t = raw.dim(0);
  NormalizeResult res;
  res.seq.frame_rate = frame_rate;
  res.seq.points = Tensor({t, 68, 2});

  std::vector<char> good(static_cast<std::size_t>(t), 0);
  int n_good = 0;
  for (int i = 0; i < t; ++i) {
    const double* f = &raw.v[static_cast<std::size_t>(i) * 136];
    if (frame_degenerate(f)) {
      res.interpolated_frames.push_back(i);
    } else {
      align_frame(f, tpl.points, &res.seq.points.v[static_cast<std::size_t>(i) * 136]);
      good[static_cast<std::size_t>(i)] = 1;
      ++n_good;
    }
  }
  if (n_good == 0)
    throw IngestError("normalize_landmarks: every frame is degenerate");

  // fill degenerate frames by linear interpolation between the nearest valid
  // neighbours (edge runs copy the nearest valid frame)
  for (int i = 0; i < t; ++i) {
    if (good[static_cast<std::size_t>(i)]) continue;
    int lo = i - 1, hi = i + 1;
    while (lo >= 0 && !good[static_cast<std::size_t>(lo)]) --lo;
    while (hi < t && !good[static_cast<std::size_t>(hi)]) ++hi;
    double* out = &res.seq.points.v[static_cast<std::size_t>(i) * 136];
    if (lo < 0 && hi >= t) continue;  // unreachable: n_good > 0
    if (lo < 0 || hi >= t) {
      int src = lo >= 0 ? lo : hi;
      const double* s = &res.seq.points.v[static_cast<std::size_t>(src) * 136];
      std::copy(s, s + 136, out);
    } else {
      double w = static_cast<double>(i - lo) / static_cast<double>(hi - lo);
      const double* a = &res.seq.points.v[static_cast<std::size_t>(lo) * 136];
      const double* b = &res.seq.points.v[static_cast<std::size_t>(hi) * 136];
      for (int j = 0; j < 136; ++j) out[j] = (1.0 - w) * a[j] + w * b[j];
    }
  }
  return res;
}

}  // namespace percog::ingest
