#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

namespace percog {

/// Dense row-major tensor of doubles. Rank 0 (scalar) up to rank 3 is what
/// the rest of the code uses; nothing here restricts the rank.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, double fill = 0.0)
      : shape(std::move(s)),
        v(static_cast<std::size_t>(count(shape)), fill) {}

  static long count(const std::vector<int>& s) {
    long n = 1;
    for (int d : s) n *= d;
    return n;
  }

  static Tensor scalar(double x) {
    Tensor t(std::vector<int>{});
    t.v = {x};
    return t;
  }
  static Tensor vec(std::vector<double> data) {
    Tensor t;
    t.shape = {static_cast<int>(data.size())};
    t.v = std::move(data);
    return t;
  }

  int numel() const { return static_cast<int>(v.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }

  // rank-2 accessors, row-major
  double& at2(int r, int c) { return v[static_cast<std::size_t>(r * shape[1] + c)]; }
  double at2(int r, int c) const { return v[static_cast<std::size_t>(r * shape[1] + c)]; }

  // rank-3 accessors
  double& at3(int a, int b, int c) {
    return v[static_cast<std::size_t>((a * shape[1] + b) * shape[2] + c)];
  }
  double at3(int a, int b, int c) const {
    return v[static_cast<std::size_t>((a * shape[1] + b) * shape[2] + c)];
  }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline bool all_finite(const Tensor& t) {
  for (double x : t.v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace percog
