#include "percog/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace percog {

namespace {

Var make_node(Tensor val, std::vector<Var> parents) {
  auto n = std::make_shared<Node>();
  n->val = std::move(val);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  return n;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a->val.same_shape(b->val))
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

Var make_const(Tensor t) {
  auto n = std::make_shared<Node>();
  n->val = std::move(t);
  return n;
}

Var make_param(Tensor t) {
  auto n = std::make_shared<Node>();
  n->val = std::move(t);
  n->requires_grad = true;
  n->ensure_grad();
  return n;
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  Tensor out = a->val;
  for (int i = 0; i < out.numel(); ++i) out[i] += b->val[i];
  auto n = make_node(std::move(out), {a, b});
  Node* pa = a.get();
  Node* pb = b.get();
  n->back = [pa, pb](Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (int i = 0; i < self.grad.numel(); ++i) pa->grad[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (int i = 0; i < self.grad.numel(); ++i) pb->grad[i] += self.grad[i];
    }
  };
  return n;
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  Tensor out = a->val;
  for (int i = 0; i < out.numel(); ++i) out[i] -= b->val[i];
  auto n = make_node(std::move(out), {a, b});
  Node* pa = a.get();
  Node* pb = b.get();
  n->back = [pa, pb](Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (int i = 0; i < self.grad.numel(); ++i) pa->grad[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (int i = 0; i < self.grad.numel(); ++i) pb->grad[i] -= self.grad[i];
    }
  };
  return n;
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  Tensor out = a->val;
  for (int i = 0; i < out.numel(); ++i) out[i] *= b->val[i];
  auto n = make_node(std::move(out), {a, b});
  Node* pa = a.get();
  Node* pb = b.get();
  n->back = [pa, pb](Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (int i = 0; i < self.grad.numel(); ++i)
        pa->grad[i] += self.grad[i] * pb->val[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (int i = 0; i < self.grad.numel(); ++i)
        pb->grad[i] += self.grad[i] * pa->val[i];
    }
  };
  return n;
}

Var div(const Var& a, const Var& b) {
  check_same_shape(a, b, "div");
  Tensor out = a->val;
  for (int i = 0; i < out.numel(); ++i) out[i] /= b->val[i];
  auto n = make_node(std::move(out), {a, b});
  Node* pa = a.get();
  Node* pb = b.get();
  n->back = [pa, pb](Node& self) {
    for (int i = 0; i < self.grad.numel(); ++i) {
      double bi = pb->val[i];
      double g = self.grad[i];
      if (pa->requires_grad) {
        pa->ensure_grad();
        pa->grad[i] += g / bi;
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        pb->grad[i] -= g * pa->val[i] / (bi * bi);
      }
    }
  };
  return n;
}

Var scale(const Var& a, double s) {
  Tensor out = a->val;
  for (double& x : out.v) x *= s;
  auto n = make_node(std::move(out), {a});
  Node* pa = a.get();
  n->back = [pa, s](Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (int i = 0; i < self.grad.numel(); ++i) pa->grad[i] += s * self.grad[i];
  };
  return n;
}

Var add_scalar(const Var& a, double s) {
  Tensor out = a->val;
  for (double& x : out.v) x += s;
  auto n = make_node(std::move(out), {a});
  Node* pa = a.get();
  n->back = [pa](Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (int i = 0; i < self.grad.numel(); ++i) pa->grad[i] += self.grad[i];
  };
  return n;
}

Var relu(const Var& a) {
  Tensor out = a->val;
  for (double& x : out.v) x = x > 0.0 ? x : 0.0;
  auto n = make_node(std::move(out), {a});
  Node* pa = a.get();
  n->back = [pa](Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (int i = 0; i < self.grad.numel(); ++i)
      if (pa->val[i] > 0.0) pa->grad[i] += self.grad[i];
  };
  return n;
}

Var tanh_v(const Var& a) {
  Tensor out = a->val;
  for (double& x : out.v) x = std::tanh(x);
  auto n = make_node(std::move(out), {a});
  Node* pa = a.get();
  n->back = [pa](Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (int i = 0; i < self.grad.numel(); ++i) {
      double y = self.val[i];
      pa->grad[i] += self.grad[i] * (1.0 - y * y);
    }
  };
  return n;
}

Var sigmoid_v(const Var& a) {
  Tensor out = a->val;
  for (double& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
  auto n = make_node(std::move(out), {a});
  Node* pa = a.get();
  n->back = [pa](Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (int i = 0; i < self.grad.numel(); ++i) {
      double y = self.val[i];
      pa->grad[i] += self.grad[i] * y * (1.0 - y);
    }
  };
  return n;
}

Var square(const Var& a) {
  Tensor out = a->val;
  for (double& x : out.v) x = x * x;
  auto n = make_node(std::move(out), {a});
  Node* pa = a.get();
  n->back = [pa](Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (int i = 0; i < self.grad.numel(); ++i)
      pa->grad[i] += self.grad[i] * 2.0 * pa->val[i];
  };
  return n;
}

Var clamp_upper(const Var& a, double cap) {
  Tensor out = a->val;
  for (double& x : out.v) x = std::min(x, cap);
  auto n = make_node(std::move(out), {a});
  Node* pa = a.get();
  n->back = [pa, cap](Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (int i = 0; i < self.grad.numel(); ++i)
      if (pa->val[i] < cap) pa->grad[i] += self.grad[i];
  };
  return n;
}

Var sum_all(const Var& a) {
  double s = 0.0;
  for (double x : a->val.v) s += x;
  auto n = make_node(Tensor::scalar(s), {a});
  Node* pa = a.get();
  n->back = [pa](Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    double g = self.grad[0];
    for (int i = 0; i < pa->grad.numel(); ++i) pa->grad[i] += g;
  };
  return n;
}

Var mean_all(const Var& a) {
  return scale(sum_all(a), 1.0 / a->val.numel());
}

Var reshape(const Var& a, std::vector<int> shape) {
  if (Tensor::count(shape) != a->val.numel())
    throw std::invalid_argument("reshape: element count mismatch");
  Tensor out;
  out.shape = std::move(shape);
  out.v = a->val.v;
  auto n = make_node(std::move(out), {a});
  Node* pa = a.get();
  n->back = [pa](Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (int i = 0; i < self.grad.numel(); ++i) pa->grad[i] += self.grad[i];
  };
  return n;
}

Var concat_vec(const std::vector<Var>& parts) {
  int total = 0;
  for (const auto& p : parts) total += p->val.numel();
  Tensor out({total});
  int off = 0;
  for (const auto& p : parts) {
    std::copy(p->val.v.begin(), p->val.v.end(), out.v.begin() + off);
    off += p->val.numel();
  }
  auto n = make_node(std::move(out), parts);
  std::vector<Node*> raw;
  raw.reserve(parts.size());
  for (const auto& p : parts) raw.push_back(p.get());
  n->back = [raw](Node& self) {
    int off = 0;
    for (Node* p : raw) {
      if (p->requires_grad) {
        p->ensure_grad();
        for (int i = 0; i < p->grad.numel(); ++i) p->grad[i] += self.grad[off + i];
      }
      off += p->val.numel();
    }
  };
  return n;
}

Var slice_vec(const Var& a, int offset, int len) {
  if (offset < 0 || offset + len > a->val.numel())
    throw std::invalid_argument("slice_vec: out of range");
  Tensor out({len});
  std::copy(a->val.v.begin() + offset, a->val.v.begin() + offset + len,
            out.v.begin());
  auto n = make_node(std::move(out), {a});
  Node* pa = a.get();
  n->back = [pa, offset, len](Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (int i = 0; i < len; ++i) pa->grad[offset + i] += self.grad[i];
  };
  return n;
}

Var concat_rows(const std::vector<Var>& parts) {
  int t = parts.front()->val.dim(1);
  int rows = 0;
  for (const auto& p : parts) {
    if (p->val.rank() != 2 || p->val.dim(1) != t)
      throw std::invalid_argument("concat_rows: incompatible shapes");
    rows += p->val.dim(0);
  }
  Tensor out({rows, t});
  int off = 0;
  for (const auto& p : parts) {
    std::copy(p->val.v.begin(), p->val.v.end(), out.v.begin() + off);
    off += p->val.numel();
  }
  auto n = make_node(std::move(out), parts);
  std::vector<Node*> raw;
  for (const auto& p : parts) raw.push_back(p.get());
  n->back = [raw](Node& self) {
    int off = 0;
    for (Node* p : raw) {
      if (p->requires_grad) {
        p->ensure_grad();
        for (int i = 0; i < p->grad.numel(); ++i) p->grad[i] += self.grad[off + i];
      }
      off += p->val.numel();
    }
  };
  return n;
}

Var mean_rows(const Var& a) {
  int r = a->val.dim(0), c = a->val.dim(1);
  Tensor out({c});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out[j] += a->val.at2(i, j);
  for (int j = 0; j < c; ++j) out[j] /= r;
  auto n = make_node(std::move(out), {a});
  Node* pa = a.get();
  n->back = [pa, r, c](Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) pa->grad.at2(i, j) += self.grad[j] / r;
  };
  return n;
}

Var transpose2(const Var& a) {
  int r = a->val.dim(0), c = a->val.dim(1);
  Tensor out({c, r});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at2(j, i) = a->val.at2(i, j);
  auto n = make_node(std::move(out), {a});
  Node* pa = a.get();
  n->back = [pa, r, c](Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) pa->grad.at2(i, j) += self.grad.at2(j, i);
  };
  return n;
}

Var matmul(const Var& a, const Var& b) {
  int m = a->val.dim(0), k = a->val.dim(1), n2 = b->val.dim(1);
  if (b->val.dim(0) != k) throw std::invalid_argument("matmul: inner dim mismatch");
  Tensor out({m, n2});
  for (int i = 0; i < m; ++i)
    for (int l = 0; l < k; ++l) {
      double av = a->val.at2(i, l);
      if (av == 0.0) continue;
      for (int j = 0; j < n2; ++j) out.at2(i, j) += av * b->val.at2(l, j);
    }
  auto n = make_node(std::move(out), {a, b});
  Node* pa = a.get();
  Node* pb = b.get();
  n->back = [pa, pb, m, k, n2](Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int l = 0; l < k; ++l) {
          double s = 0.0;
          for (int j = 0; j < n2; ++j)
            s += self.grad.at2(i, j) * pb->val.at2(l, j);
          pa->grad.at2(i, l) += s;
        }
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (int l = 0; l < k; ++l)
        for (int j = 0; j < n2; ++j) {
          double s = 0.0;
          for (int i = 0; i < m; ++i)
            s += pa->val.at2(i, l) * self.grad.at2(i, j);
          pb->grad.at2(l, j) += s;
        }
    }
  };
  return n;
}

Var matvec(const Var& w, const Var& x) {
  int m = w->val.dim(0), k = w->val.dim(1);
  if (x->val.numel() != k) throw std::invalid_argument("matvec: dim mismatch");
  Tensor out({m});
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += w->val.at2(i, j) * x->val[j];
    out[i] = s;
  }
  auto n = make_node(std::move(out), {w, x});
  Node* pw = w.get();
  Node* px = x.get();
  n->back = [pw, px, m, k](Node& self) {
    if (pw->requires_grad) {
      pw->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j)
          pw->grad.at2(i, j) += self.grad[i] * px->val[j];
    }
    if (px->requires_grad) {
      px->ensure_grad();
      for (int j = 0; j < k; ++j) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += pw->val.at2(i, j) * self.grad[i];
        px->grad[j] += s;
      }
    }
  };
  return n;
}

Var linear(const Var& w, const Var& b, const Var& x) {
  return add(matvec(w, x), b);
}

Var add_bias_rows(const Var& x, const Var& b) {
  int c = x->val.dim(0), t = x->val.dim(1);
  if (b->val.numel() != c) throw std::invalid_argument("add_bias_rows: dim mismatch");
  Tensor out = x->val;
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < t; ++j) out.at2(i, j) += b->val[i];
  auto n = make_node(std::move(out), {x, b});
  Node* px = x.get();
  Node* pb = b.get();
  n->back = [px, pb, c, t](Node& self) {
    if (px->requires_grad) {
      px->ensure_grad();
      for (int i = 0; i < self.grad.numel(); ++i) px->grad[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (int i = 0; i < c; ++i) {
        double s = 0.0;
        for (int j = 0; j < t; ++j) s += self.grad.at2(i, j);
        pb->grad[i] += s;
      }
    }
  };
  return n;
}

Var conv1d(const Var& x, const Var& w, int stride, int dilation) {
  int cin = x->val.dim(0), t = x->val.dim(1);
  int k = w->val.dim(0), wcin = w->val.dim(1), cout = w->val.dim(2);
  if (wcin != cin) throw std::invalid_argument("conv1d: channel mismatch");
  int pad = ((k - 1) * dilation) / 2;
  int span = (k - 1) * dilation + 1;
  int tout = (t + 2 * pad - span) / stride + 1;
  Tensor out({cout, tout});
  for (int tp = 0; tp < tout; ++tp)
    for (int kk = 0; kk < k; ++kk) {
      int xi = tp * stride + kk * dilation - pad;
      if (xi < 0 || xi >= t) continue;
      for (int ci = 0; ci < cin; ++ci) {
        double xv = x->val.at2(ci, xi);
        if (xv == 0.0) continue;
        const double* wrow = &w->val.v[static_cast<std::size_t>((kk * cin + ci) * cout)];
        for (int co = 0; co < cout; ++co) out.at2(co, tp) += wrow[co] * xv;
      }
    }
  auto n = make_node(std::move(out), {x, w});
  Node* px = x.get();
  Node* pw = w.get();
  n->back = [px, pw, stride, dilation, cin, t, k, cout, pad, tout](Node& self) {
    bool gx = px->requires_grad, gw = pw->requires_grad;
    if (gx) px->ensure_grad();
    if (gw) pw->ensure_grad();
    for (int tp = 0; tp < tout; ++tp)
      for (int kk = 0; kk < k; ++kk) {
        int xi = tp * stride + kk * dilation - pad;
        if (xi < 0 || xi >= t) continue;
        for (int ci = 0; ci < cin; ++ci) {
          double xv = px->val.at2(ci, xi);
          std::size_t wbase = static_cast<std::size_t>((kk * cin + ci) * cout);
          double acc = 0.0;
          for (int co = 0; co < cout; ++co) {
            double g = self.grad.at2(co, tp);
            if (gw) pw->grad.v[wbase + co] += g * xv;
            acc += pw->val.v[wbase + co] * g;
          }
          if (gx) px->grad.at2(ci, xi) += acc;
        }
      }
  };
  return n;
}

Var tconv1d(const Var& x, const Var& w, int stride) {
  int cin = x->val.dim(0), t = x->val.dim(1);
  int k = w->val.dim(0), wcin = w->val.dim(1), cout = w->val.dim(2);
  if (wcin != cin) throw std::invalid_argument("tconv1d: channel mismatch");
  const int pad = 1;
  int tout = t * stride;
  Tensor out({cout, tout});
  for (int tp = 0; tp < t; ++tp)
    for (int kk = 0; kk < k; ++kk) {
      int oi = tp * stride + kk - pad;
      if (oi < 0 || oi >= tout) continue;
      for (int ci = 0; ci < cin; ++ci) {
        double xv = x->val.at2(ci, tp);
        if (xv == 0.0) continue;
        const double* wrow = &w->val.v[static_cast<std::size_t>((kk * cin + ci) * cout)];
        for (int co = 0; co < cout; ++co) out.at2(co, oi) += wrow[co] * xv;
      }
    }
  auto n = make_node(std::move(out), {x, w});
  Node* px = x.get();
  Node* pw = w.get();
  n->back = [px, pw, stride, cin, t, k, cout, tout](Node& self) {
    const int pad = 1;
    bool gx = px->requires_grad, gw = pw->requires_grad;
    if (gx) px->ensure_grad();
    if (gw) pw->ensure_grad();
    for (int tp = 0; tp < t; ++tp)
      for (int kk = 0; kk < k; ++kk) {
        int oi = tp * stride + kk - pad;
        if (oi < 0 || oi >= tout) continue;
        for (int ci = 0; ci < cin; ++ci) {
          double xv = px->val.at2(ci, tp);
          std::size_t wbase = static_cast<std::size_t>((kk * cin + ci) * cout);
          double acc = 0.0;
          for (int co = 0; co < cout; ++co) {
            double g = self.grad.at2(co, oi);
            if (gw) pw->grad.v[wbase + co] += g * xv;
            acc += pw->val.v[wbase + co] * g;
          }
          if (gx) px->grad.at2(ci, tp) += acc;
        }
      }
  };
  return n;
}

Var maxpool1d(const Var& x, int k, int stride) {
  int c = x->val.dim(0), t = x->val.dim(1);
  int pad = (k - 1) / 2;
  int tout = (t + 2 * pad - k) / stride + 1;
  Tensor out({c, tout});
  std::vector<int> argmax(static_cast<std::size_t>(c * tout));
  for (int ci = 0; ci < c; ++ci)
    for (int tp = 0; tp < tout; ++tp) {
      double best = 0.0;
      int besti = -1;
      for (int kk = 0; kk < k; ++kk) {
        int xi = tp * stride + kk - pad;
        if (xi < 0 || xi >= t) continue;
        double v = x->val.at2(ci, xi);
        if (besti < 0 || v > best) {
          best = v;
          besti = xi;
        }
      }
      out.at2(ci, tp) = best;
      argmax[static_cast<std::size_t>(ci * tout + tp)] = besti;
    }
  auto n = make_node(std::move(out), {x});
  Node* px = x.get();
  n->back = [px, c, tout, argmax](Node& self) {
    if (!px->requires_grad) return;
    px->ensure_grad();
    for (int ci = 0; ci < c; ++ci)
      for (int tp = 0; tp < tout; ++tp)
        px->grad.at2(ci, argmax[static_cast<std::size_t>(ci * tout + tp)]) +=
            self.grad.at2(ci, tp);
  };
  return n;
}

Var avgpool1d(const Var& x, int k, int stride) {
  int c = x->val.dim(0), t = x->val.dim(1);
  int pad = (k - 1) / 2;
  int tout = (t + 2 * pad - k) / stride + 1;
  Tensor out({c, tout});
  for (int ci = 0; ci < c; ++ci)
    for (int tp = 0; tp < tout; ++tp) {
      double s = 0.0;
      int cnt = 0;
      for (int kk = 0; kk < k; ++kk) {
        int xi = tp * stride + kk - pad;
        if (xi < 0 || xi >= t) continue;
        s += x->val.at2(ci, xi);
        ++cnt;
      }
      out.at2(ci, tp) = s / cnt;
    }
  auto n = make_node(std::move(out), {x});
  Node* px = x.get();
  n->back = [px, c, t, tout, k, stride, pad](Node& self) {
    if (!px->requires_grad) return;
    px->ensure_grad();
    for (int ci = 0; ci < c; ++ci)
      for (int tp = 0; tp < tout; ++tp) {
        int cnt = 0;
        for (int kk = 0; kk < k; ++kk) {
          int xi = tp * stride + kk - pad;
          if (xi >= 0 && xi < t) ++cnt;
        }
        double g = self.grad.at2(ci, tp) / cnt;
        for (int kk = 0; kk < k; ++kk) {
          int xi = tp * stride + kk - pad;
          if (xi >= 0 && xi < t) px->grad.at2(ci, xi) += g;
        }
      }
  };
  return n;
}

Var upsample_nearest2(const Var& x) {
  int c = x->val.dim(0), t = x->val.dim(1);
  Tensor out({c, 2 * t});
  for (int ci = 0; ci < c; ++ci)
    for (int tp = 0; tp < t; ++tp) {
      double v = x->val.at2(ci, tp);
      out.at2(ci, 2 * tp) = v;
      out.at2(ci, 2 * tp + 1) = v;
    }
  auto n = make_node(std::move(out), {x});
  Node* px = x.get();
  n->back = [px, c, t](Node& self) {
    if (!px->requires_grad) return;
    px->ensure_grad();
    for (int ci = 0; ci < c; ++ci)
      for (int tp = 0; tp < t; ++tp)
        px->grad.at2(ci, tp) +=
            self.grad.at2(ci, 2 * tp) + self.grad.at2(ci, 2 * tp + 1);
  };
  return n;
}

Var upsample_linear2(const Var& x) {
  int c = x->val.dim(0), t = x->val.dim(1);
  Tensor out({c, 2 * t});
  for (int ci = 0; ci < c; ++ci)
    for (int tp = 0; tp < t; ++tp) {
      double v = x->val.at2(ci, tp);
      double nxt = x->val.at2(ci, std::min(tp + 1, t - 1));
      out.at2(ci, 2 * tp) = v;
      out.at2(ci, 2 * tp + 1) = 0.5 * (v + nxt);
    }
  auto n = make_node(std::move(out), {x});
  Node* px = x.get();
  n->back = [px, c, t](Node& self) {
    if (!px->requires_grad) return;
    px->ensure_grad();
    for (int ci = 0; ci < c; ++ci)
      for (int tp = 0; tp < t; ++tp) {
        int nxt = std::min(tp + 1, t - 1);
        px->grad.at2(ci, tp) += self.grad.at2(ci, 2 * tp);
        px->grad.at2(ci, tp) += 0.5 * self.grad.at2(ci, 2 * tp + 1);
        px->grad.at2(ci, nxt) += 0.5 * self.grad.at2(ci, 2 * tp + 1);
      }
  };
  return n;
}

Var scale_by(const Var& x, const Var& coeffs, int idx) {
  double s = coeffs->val[idx];
  Tensor out = x->val;
  for (double& v : out.v) v *= s;
  auto n = make_node(std::move(out), {x, coeffs});
  Node* px = x.get();
  Node* pc = coeffs.get();
  n->back = [px, pc, idx, s](Node& self) {
    if (px->requires_grad) {
      px->ensure_grad();
      for (int i = 0; i < self.grad.numel(); ++i) px->grad[i] += s * self.grad[i];
    }
    if (pc->requires_grad) {
      pc->ensure_grad();
      double acc = 0.0;
      for (int i = 0; i < self.grad.numel(); ++i) acc += self.grad[i] * px->val[i];
      pc->grad[idx] += acc;
    }
  };
  return n;
}

Var col(const Var& x, int t) {
  int c = x->val.dim(0), tt = x->val.dim(1);
  if (t < 0 || t >= tt) throw std::invalid_argument("col: index out of range");
  Tensor out({c});
  for (int i = 0; i < c; ++i) out[i] = x->val.at2(i, t);
  auto n = make_node(std::move(out), {x});
  Node* px = x.get();
  n->back = [px, c, t](Node& self) {
    if (!px->requires_grad) return;
    px->ensure_grad();
    for (int i = 0; i < c; ++i) px->grad.at2(i, t) += self.grad[i];
  };
  return n;
}

Var stack_cols(const std::vector<Var>& cols) {
  int c = cols.front()->val.numel();
  int t = static_cast<int>(cols.size());
  Tensor out({c, t});
  for (int j = 0; j < t; ++j) {
    if (cols[static_cast<std::size_t>(j)]->val.numel() != c)
      throw std::invalid_argument("stack_cols: inconsistent column sizes");
    for (int i = 0; i < c; ++i)
      out.at2(i, j) = cols[static_cast<std::size_t>(j)]->val[i];
  }
  auto n = make_node(std::move(out), cols);
  std::vector<Node*> raw;
  for (const auto& p : cols) raw.push_back(p.get());
  n->back = [raw, c](Node& self) {
    for (int j = 0; j < static_cast<int>(raw.size()); ++j) {
      Node* p = raw[static_cast<std::size_t>(j)];
      if (!p->requires_grad) continue;
      p->ensure_grad();
      for (int i = 0; i < c; ++i) p->grad[i] += self.grad.at2(i, j);
    }
  };
  return n;
}

Var pair_rows_sum(const Var& x) {
  int c = x->val.dim(0), t = x->val.dim(1);
  if (c % 2 != 0) throw std::invalid_argument("pair_rows_sum: odd row count");
  Tensor out({c / 2, t});
  for (int j = 0; j < c / 2; ++j)
    for (int tt = 0; tt < t; ++tt)
      out.at2(j, tt) = x->val.at2(2 * j, tt) + x->val.at2(2 * j + 1, tt);
  auto n = make_node(std::move(out), {x});
  Node* px = x.get();
  n->back = [px, c, t](Node& self) {
    if (!px->requires_grad) return;
    px->ensure_grad();
    for (int j = 0; j < c / 2; ++j)
      for (int tt = 0; tt < t; ++tt) {
        double g = self.grad.at2(j, tt);
        px->grad.at2(2 * j, tt) += g;
        px->grad.at2(2 * j + 1, tt) += g;
      }
  };
  return n;
}

Var softmax_masked(const Var& logits, const std::vector<char>& mask) {
  int k = logits->val.numel();
  if (static_cast<int>(mask.size()) != k)
    throw std::invalid_argument("softmax_masked: mask size mismatch");
  double mx = -1e300;
  bool any = false;
  for (int i = 0; i < k; ++i)
    if (mask[i]) {
      mx = std::max(mx, logits->val[i]);
      any = true;
    }
  if (!any) throw std::runtime_error("softmax_masked: all entries masked out");
  Tensor out({k});
  double z = 0.0;
  for (int i = 0; i < k; ++i)
    if (mask[i]) {
      out[i] = std::exp(logits->val[i] - mx);
      z += out[i];
    }
  for (int i = 0; i < k; ++i)
    if (mask[i]) out[i] /= z;
  auto n = make_node(std::move(out), {logits});
  Node* pl = logits.get();
  n->back = [pl, mask, k](Node& self) {
    if (!pl->requires_grad) return;
    pl->ensure_grad();
    double dot = 0.0;
    for (int i = 0; i < k; ++i)
      if (mask[i]) dot += self.grad[i] * self.val[i];
    for (int i = 0; i < k; ++i)
      if (mask[i]) pl->grad[i] += self.val[i] * (self.grad[i] - dot);
  };
  return n;
}

Var softmax_rows(const Var& a) {
  int r = a->val.dim(0), c = a->val.dim(1);
  Tensor out({r, c});
  for (int i = 0; i < r; ++i) {
    double mx = a->val.at2(i, 0);
    for (int j = 1; j < c; ++j) mx = std::max(mx, a->val.at2(i, j));
    double z = 0.0;
    for (int j = 0; j < c; ++j) {
      out.at2(i, j) = std::exp(a->val.at2(i, j) - mx);
      z += out.at2(i, j);
    }
    for (int j = 0; j < c; ++j) out.at2(i, j) /= z;
  }
  auto n = make_node(std::move(out), {a});
  Node* pa = a.get();
  n->back = [pa, r, c](Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (int i = 0; i < r; ++i) {
      double dot = 0.0;
      for (int j = 0; j < c; ++j) dot += self.grad.at2(i, j) * self.val.at2(i, j);
      for (int j = 0; j < c; ++j)
        pa->grad.at2(i, j) += self.val.at2(i, j) * (self.grad.at2(i, j) - dot);
    }
  };
  return n;
}

Var dropout(const Var& a, double rate, Rng& rng, bool training) {
  if (!training || rate <= 0.0) return a;
  double keep = 1.0 - rate;
  std::vector<double> m(static_cast<std::size_t>(a->val.numel()));
  for (auto& x : m) x = rng.uniform() < keep ? 1.0 / keep : 0.0;
  Tensor out = a->val;
  for (int i = 0; i < out.numel(); ++i) out[i] *= m[static_cast<std::size_t>(i)];
  auto n = make_node(std::move(out), {a});
  Node* pa = a.get();
  n->back = [pa, m](Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (int i = 0; i < self.grad.numel(); ++i)
      pa->grad[i] += self.grad[i] * m[static_cast<std::size_t>(i)];
  };
  return n;
}

Var sum_sq_diff(const Var& a, const Var& b) {
  check_same_shape(a, b, "sum_sq_diff");
  double s = 0.0;
  for (int i = 0; i < a->val.numel(); ++i) {
    double d = a->val[i] - b->val[i];
    s += d * d;
  }
  auto n = make_node(Tensor::scalar(s), {a, b});
  Node* pa = a.get();
  Node* pb = b.get();
  n->back = [pa, pb](Node& self) {
    double g = self.grad[0];
    for (int i = 0; i < pa->val.numel(); ++i) {
      double d = 2.0 * (pa->val[i] - pb->val[i]) * g;
      if (pa->requires_grad) {
        pa->ensure_grad();
        pa->grad[i] += d;
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        pb->grad[i] -= d;
      }
    }
  };
  return n;
}

Var mse(const Var& a, const Var& b) {
  return scale(sum_sq_diff(a, b), 1.0 / a->val.numel());
}

void backward(const Var& root) {
  if (root->val.numel() != 1)
    throw std::invalid_argument("backward: root must be scalar");
  // iterative postorder DFS; postorder has inputs before consumers
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->back && n->requires_grad && !n->grad.v.empty()) n->back(*n);
  }
}

double value(const Var& s) {
  if (s->val.numel() != 1) throw std::invalid_argument("value: not a scalar");
  return s->val[0];
}

}  // namespace percog
