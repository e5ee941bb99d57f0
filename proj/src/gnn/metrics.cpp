#include "percog/gnn/metrics.hpp"

#include <cmath>

namespace percog::gnn {

double pcc(const std::vector<double>& f, const std::vector<double>& y) {
  if (f.size() != y.size()) throw std::invalid_argument("pcc: length mismatch");
  std::size_t n = f.size();
  if (n < 2) throw std::invalid_argument("pcc: need at least two samples");
  double mf = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mf += f[i];
    my += y[i];
  }
  mf /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double cov = 0.0, vf = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double df = f[i] - mf, dy = y[i] - my;
    cov += df * dy;
    vf += df * df;
    vy += dy * dy;
  }
  if (vf == 0.0 || vy == 0.0)
    throw UndefinedCorrelationError("pcc: zero variance makes the correlation undefined");
  return cov / (std::sqrt(vf) * std::sqrt(vy));
}

double acc(const std::vector<double>& f, const std::vector<double>& y) {
  if (f.size() != y.size()) throw std::invalid_argument("acc: length mismatch");
  if (f.empty()) throw std::invalid_argument("acc: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] < 0.0 || f[i] > 1.0 || y[i] < 0.0 || y[i] > 1.0)
      throw std::invalid_argument("acc: values must lie in [0,1]");
    s += std::abs(f[i] - y[i]);
  }
  return 1.0 - s / static_cast<double>(f.size());
}

}  // namespace percog::gnn
