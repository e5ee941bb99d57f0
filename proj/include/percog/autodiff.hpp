#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "percog/rng.hpp"
#include "percog/tensor.hpp"

namespace percog {

// Reverse-mode automatic differentiation on a dynamically built tape.
// Everything runs in double precision; each op below owns its exact adjoint.
// A Var is a shared handle to one tape node; parameters are long-lived nodes
// reused across steps, intermediate nodes live only as long as the step's
// graph. backward() propagates from a scalar root in reverse topological
// order.

class Node;
using Var = std::shared_ptr<Node>;

class Node {
 public:
  Tensor val;
  Tensor grad;  // allocated lazily, same shape as val
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> back;  // adjoint; may be empty for leaves

  Node() = default;
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  void ensure_grad() {
    if (grad.v.empty()) grad = Tensor(val.shape, 0.0);
  }
  void zero_grad() {
    if (!grad.v.empty()) grad.fill(0.0);
  }
};

Var make_const(Tensor t);
Var make_param(Tensor t);

// ---- elementwise ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);      // Hadamard, equal shapes
Var div(const Var& a, const Var& b);      // elementwise a/b, equal shapes
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var relu(const Var& a);
Var tanh_v(const Var& a);
Var sigmoid_v(const Var& a);
Var square(const Var& a);
Var clamp_upper(const Var& a, double cap);  // min(x, cap); gradient 0 where clamped

// ---- reductions / shaping ----
Var sum_all(const Var& a);
Var mean_all(const Var& a);
Var reshape(const Var& a, std::vector<int> shape);
Var concat_vec(const std::vector<Var>& parts);           // rank-1 concat
Var slice_vec(const Var& a, int offset, int len);        // rank-1 slice
Var concat_rows(const std::vector<Var>& parts);          // rank-2, stack along dim 0
Var mean_rows(const Var& a);                             // (R,C) -> (C), mean over rows
Var transpose2(const Var& a);

// ---- linear algebra ----
Var matmul(const Var& a, const Var& b);    // (m,k)x(k,n) -> (m,n)
Var matvec(const Var& w, const Var& x);    // (m,n)x(n) -> (m)
Var linear(const Var& w, const Var& b, const Var& x);  // w x + b
Var add_bias_rows(const Var& x, const Var& b);  // x:(C,T) + b:(C) per row

// ---- temporal ops on (C,T) maps ----
// conv1d uses "same" padding: pad = ((k-1)*dilation)/2, output length
// (T + 2*pad - ((k-1)*dilation + 1))/stride + 1. Weights are (K,Cin,Cout).
Var conv1d(const Var& x, const Var& w, int stride, int dilation);
// transposed conv, output length T*stride, pad 1 (kernel 3 semantics)
Var tconv1d(const Var& x, const Var& w, int stride);
Var maxpool1d(const Var& x, int k, int stride);   // window centre pad, valid elements only
Var avgpool1d(const Var& x, int k, int stride);   // mean over valid elements
Var upsample_nearest2(const Var& x);              // T -> 2T
Var upsample_linear2(const Var& x);               // T -> 2T

// ---- mixing / sequence helpers ----
Var scale_by(const Var& x, const Var& coeffs, int idx);  // x * coeffs[idx]
Var col(const Var& x, int t);                       // (C,T) -> (C) column
Var stack_cols(const std::vector<Var>& cols);       // T vectors (C) -> (C,T)
// (136,T) -> (68,T): out[j,t] = x[2j,t] + x[2j+1,t]
Var pair_rows_sum(const Var& x);

// ---- attention / softmax ----
// softmax over a rank-1 vector restricted to mask!=0; output is 0 at masked
// positions and the unmasked entries sum to 1.
Var softmax_masked(const Var& logits, const std::vector<char>& mask);
// rank-2: softmax along each row
Var softmax_rows(const Var& a);

// ---- regularisation ----
Var dropout(const Var& a, double rate, Rng& rng, bool training);

// ---- losses ----
Var sum_sq_diff(const Var& a, const Var& b);  // sum((a-b)^2)
Var mse(const Var& a, const Var& b);          // mean((a-b)^2)

/// Backpropagate from a scalar root. Accumulates into .grad of every
/// reachable node with requires_grad set (directly or transitively).
void backward(const Var& root);

double value(const Var& s);  // scalar nodes only

}  // namespace percog
